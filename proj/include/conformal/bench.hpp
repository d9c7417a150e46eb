#pragma once

#include <cstdint>
#include <vector>

#include "conformal/core.hpp"
#include "conformal/metrics.hpp"

namespace conformal::bench {

enum class Study { Arma, Shift };
enum class Predictor { Oracle, Ridge };

/// Grid of independent benchmark cells: seeds x methods x alphas x params.
/// param is the joint ARMA coefficient (psi = xi) for the ARMA study and the
/// variance-shift delta for the shift study.
struct StudyConfig {
    Study study = Study::Shift;
    std::vector<Method> methods = {Method::AgAci, Method::SfOgd, Method::Saocp, Method::Faci};
    std::vector<double> alphas = {0.9};
    int num_seeds = 50; // seeds 1..num_seeds
    std::vector<double> params;
    Predictor predictor = Predictor::Oracle;
    int workers = 1;

    std::vector<double> resolved_params() const;
};

struct CellKey {
    std::uint64_t seed = 0;
    Method method = Method::Aci;
    double alpha = 0.9;
    double param = 0.0;
};

struct CellResult {
    CellKey key;
    RunReport report;
    double estimated_D = 0.0;
};

/// Runs every cell of the grid; rows come back in grid order regardless of
/// the worker count.
std::vector<CellResult> run_study(const StudyConfig& config);

/// The interval constructor each method used in its original presentation.
ConstructorKind original_constructor(Method method);

struct AggregateRow {
    Method method = Method::Aci;
    double alpha = 0.9;
    double param = 0.0;
    std::string metric;
    double mean = 0.0;
    double q10 = 0.0;
    double q90 = 0.0;
};

/// Per-cell mean and 10%/90% quantiles across seeds of the headline metrics.
std::vector<AggregateRow> aggregate(const std::vector<CellResult>& results);

/// Worker count: the environment variable CONFORMAL_WORKERS wins over the
/// requested value; zero requests hardware concurrency.
int resolve_workers(int requested);

} // namespace conformal::bench

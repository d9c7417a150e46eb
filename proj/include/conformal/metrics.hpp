#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conformal/core.hpp"

namespace conformal {

/// 1-based inclusive range of step indices used for evaluation.
struct EvalRange {
    std::int64_t start = 1;
    std::int64_t end = 1;

    std::int64_t length() const { return end - start + 1; }
};

/// Metric bundle over one completed run. mean_width excludes infinite-width
/// steps (which are counted separately); regret is absent when the method
/// does not emit a theta sequence (AgACI).
struct RunReport {
    double empirical_coverage = 0.0;
    double coverage_error = 0.0;
    std::optional<double> mean_width;
    std::int64_t infinite_width_count = 0;
    double path_length = 0.0;
    std::optional<double> regret;
    std::map<std::int64_t, double> sa_regret; // window length -> value
    std::int64_t eval_start = 1;
    std::int64_t eval_end = 1;
};

double empirical_coverage(std::span<const StreamStep> steps, EvalRange range);

double coverage_error(std::span<const StreamStep> steps, EvalRange range, double alpha);

/// Mean of the finite widths over the range plus the count of infinite-width
/// steps. Throws when every width in the range is infinite.
std::pair<double, std::int64_t> mean_width(std::span<const StreamStep> steps, EvalRange range);

/// Total variation of widths over the range; pairs touching an infinite
/// width are skipped.
double path_length(std::span<const StreamStep> steps, EvalRange range);

/// Exact minimizer of the cumulative pinball loss over a fixed theta. The
/// objective is piecewise linear with breakpoints at the radii, so the
/// minimum is attained at an order statistic.
struct BestFixedTheta {
    double theta = 0.0;
    double loss = 0.0;
};
BestFixedTheta best_fixed_theta(std::span<const double> radii, double alpha);

/// Cumulative pinball loss of the played thetas minus the best fixed
/// competitor; signed (no clamping at zero).
double regret(std::span<const double> thetas, std::span<const double> radii, double alpha);

/// Largest windowed regret over all contiguous windows of length m.
double strongly_adaptive_regret(std::span<const double> thetas, std::span<const double> radii,
                                double alpha, std::int64_t m);

/// Assembles the full report; steps with a non-finite radius are excluded
/// from the regret sums (they carry no pinball information) and theta-less
/// runs (any NaN theta in range) get no regret.
RunReport build_report(std::span<const StreamStep> steps, EvalRange range, double alpha,
                       std::span<const std::int64_t> sa_windows = {});

/// Flat key-value JSON document with the exact report keys.
std::string report_to_json(const RunReport& report,
                           const std::map<std::string, std::string>& extra = {});

} // namespace conformal

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "conformal/core.hpp"

namespace conformal {

/// Nonconformity score: disagreement between a prediction and an outcome.
/// Must be nonnegative and zero when they coincide.
using ScoreFn = std::function<double(double prediction, double outcome)>;

double absolute_residual(double prediction, double outcome);

/// Append-only multiset of scores for observations seen so far, kept sorted.
class ScoreStore {
public:
    ScoreStore() : score_fn_(absolute_residual) {}
    explicit ScoreStore(ScoreFn fn) : score_fn_(std::move(fn)) {}

    void append(double prediction, double outcome);

    std::size_t size() const { return sorted_.size(); }
    bool empty() const { return sorted_.empty(); }

    /// k-th smallest stored score, 1-based; k must be in [1, size].
    double kth_smallest(std::size_t k) const;

    /// Number of stored scores strictly less than value.
    std::size_t count_less(double value) const;

    const std::vector<double>& sorted_scores() const { return sorted_; }

private:
    std::vector<double> sorted_;
    ScoreFn score_fn_;
};

// --- linear constructor -----------------------------------------------------

/// [prediction - theta, prediction + theta]; negative theta collapses to the
/// degenerate point interval.
PredictionInterval linear_interval(double prediction, double theta);

/// Smallest theta covering the outcome: the absolute residual.
double linear_radius(double prediction, double outcome);

// --- quantile constructor ---------------------------------------------------

/// Empirical theta-quantile of the stored scores, i.e. the ceil(theta*n)-th
/// smallest. Out-of-range conventions keep the family nested: theta > 1 gives
/// +inf, theta <= 0 gives -inf, and an empty store gives +inf for every theta
/// (always cover).
double empirical_quantile(double theta, const ScoreStore& store);

/// Symmetric interval with half-width empirical_quantile(theta, store). An
/// infinite negative half-width collapses to the degenerate point interval.
PredictionInterval quantile_interval(double prediction, double theta,
                                     const ScoreStore& store);

/// Smallest theta on the grid {k/n} whose quantile interval covers the
/// outcome. Residuals above every stored score return the sentinel 1 + 1/n
/// (not coverable at any theta <= 1); an empty store returns -inf (every
/// theta covers).
double quantile_radius(double prediction, double outcome, const ScoreStore& store);

// --- rule abstraction shared by the online machines --------------------------

/// One interval-construction rule plus whatever state it accumulates.
class IntervalRule {
public:
    virtual ~IntervalRule() = default;

    virtual PredictionInterval make(double prediction, double theta) const = 0;
    virtual double radius(double prediction, double outcome) const = 0;
    virtual void record(double prediction, double outcome) = 0;

    bool covers(double prediction, double outcome, double theta) const {
        return make(prediction, theta).contains(outcome);
    }
};

class LinearRule final : public IntervalRule {
public:
    PredictionInterval make(double prediction, double theta) const override {
        return linear_interval(prediction, theta);
    }
    double radius(double prediction, double outcome) const override {
        return linear_radius(prediction, outcome);
    }
    void record(double, double) override {}
};

class QuantileRule final : public IntervalRule {
public:
    QuantileRule() = default;
    explicit QuantileRule(ScoreFn fn) : store_(std::move(fn)) {}

    PredictionInterval make(double prediction, double theta) const override {
        return quantile_interval(prediction, theta, store_);
    }
    double radius(double prediction, double outcome) const override {
        return quantile_radius(prediction, outcome, store_);
    }
    void record(double prediction, double outcome) override {
        store_.append(prediction, outcome);
    }

    const ScoreStore& store() const { return store_; }

private:
    ScoreStore store_;
};

std::unique_ptr<IntervalRule> make_rule(ConstructorKind kind);

} // namespace conformal

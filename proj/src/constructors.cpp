#include "conformal/constructors.hpp"

#include <algorithm>
#include <cmath>

namespace conformal {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double absolute_residual(double prediction, double outcome) {
    return std::abs(prediction - outcome);
}

void ScoreStore::append(double prediction, double outcome) {
    const double s = score_fn_(prediction, outcome);
    if (!std::isfinite(s) || s < 0.0) {
        throw std::invalid_argument("ScoreStore: score function produced a negative or non-finite value");
    }
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), s), s);
}

double ScoreStore::kth_smallest(std::size_t k) const {
    if (k < 1 || k > sorted_.size()) {
        throw std::out_of_range("ScoreStore: order statistic out of range");
    }
    return sorted_[k - 1];
}

std::size_t ScoreStore::count_less(double value) const {
    return static_cast<std::size_t>(
        std::lower_bound(sorted_.begin(), sorted_.end(), value) - sorted_.begin());
}

PredictionInterval linear_interval(double prediction, double theta) {
    if (!std::isfinite(prediction)) {
        throw std::invalid_argument("linear_interval: non-finite prediction");
    }
    if (!(theta > 0.0)) {
        // theta <= 0 (or NaN) collapses to the point interval
        return {prediction, prediction};
    }
    return {prediction - theta, prediction + theta};
}

double linear_radius(double prediction, double outcome) {
    if (!std::isfinite(prediction) || !std::isfinite(outcome)) {
        throw std::invalid_argument("linear_radius: non-finite input");
    }
    return std::abs(prediction - outcome);
}

double empirical_quantile(double theta, const ScoreStore& store) {
    if (std::isnan(theta)) {
        throw std::invalid_argument("empirical_quantile: NaN theta");
    }
    if (store.empty()) return kInf;
    if (theta <= 0.0) return -kInf;
    const std::size_t n = store.size();
    const auto k = static_cast<std::size_t>(std::ceil(theta * static_cast<double>(n)));
    if (k > n) return kInf; // theta > 1
    return store.kth_smallest(std::max<std::size_t>(k, 1));
}

PredictionInterval quantile_interval(double prediction, double theta,
                                     const ScoreStore& store) {
    if (!std::isfinite(prediction)) {
        throw std::invalid_argument("quantile_interval: non-finite prediction");
    }
    const double half_width = empirical_quantile(theta, store);
    if (half_width == -kInf) {
        return {prediction, prediction};
    }
    return {prediction - half_width, prediction + half_width};
}

double quantile_radius(double prediction, double outcome, const ScoreStore& store) {
    if (!std::isfinite(prediction) || !std::isfinite(outcome)) {
        throw std::invalid_argument("quantile_radius: non-finite input");
    }
    if (store.empty()) {
        // Every theta yields an infinite interval: any theta covers.
        return -kInf;
    }
    const double residual = std::abs(prediction - outcome);
    const auto n = static_cast<double>(store.size());
    const std::size_t below = store.count_less(residual);
    if (below == store.size()) {
        return 1.0 + 1.0 / n; // only coverable at theta > 1
    }
    return static_cast<double>(below + 1) / n;
}

std::unique_ptr<IntervalRule> make_rule(ConstructorKind kind) {
    if (kind == ConstructorKind::Linear) return std::make_unique<LinearRule>();
    return std::make_unique<QuantileRule>();
}

} // namespace conformal

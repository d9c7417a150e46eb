#include "conformal/core.hpp"

namespace conformal {

std::string to_string(Method m) {
    switch (m) {
        case Method::Aci: return "ACI";
        case Method::AgAci: return "AgACI";
        case Method::Faci: return "FACI";
        case Method::SfOgd: return "SF-OGD";
        case Method::Saocp: return "SAOCP";
    }
    return "?";
}

std::string to_string(ConstructorKind c) {
    return c == ConstructorKind::Linear ? "linear" : "quantile";
}

std::optional<Method> parse_method(const std::string& name) {
    if (name == "ACI") return Method::Aci;
    if (name == "AgACI") return Method::AgAci;
    if (name == "FACI") return Method::Faci;
    if (name == "SF-OGD") return Method::SfOgd;
    if (name == "SAOCP") return Method::Saocp;
    return std::nullopt;
}

std::optional<ConstructorKind> parse_constructor(const std::string& name) {
    if (name == "linear") return ConstructorKind::Linear;
    if (name == "quantile") return ConstructorKind::Quantile;
    return std::nullopt;
}

std::vector<double> RunConfig::resolved_gamma_grid() const {
    if (!gamma_grid.empty()) return gamma_grid;
    return {0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.064, 0.128};
}

void RunConfig::validate() const {
    TargetLevel check_alpha(alpha);
    if (gamma && !(*gamma >= 0.0 && std::isfinite(*gamma))) {
        throw std::invalid_argument("RunConfig: gamma must be nonnegative and finite");
    }
    const auto grid = resolved_gamma_grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
            throw std::invalid_argument("RunConfig: gamma_grid entries must be positive");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw std::invalid_argument("RunConfig: gamma_grid must be strictly increasing");
        }
    }
    if (lifetime_multiplier < 1) {
        throw std::invalid_argument("RunConfig: lifetime multiplier must be >= 1");
    }
    if (interval_length < 1) {
        throw std::invalid_argument("RunConfig: interval length must be >= 1");
    }
    if (theta1 && !std::isfinite(*theta1)) {
        throw std::invalid_argument("RunConfig: theta1 must be finite");
    }
}

Emission OnlineIntervalAlgorithm::predict(double prediction) {
    if (awaiting_outcome_) {
        throw std::logic_error("predict() called twice without an intervening observe()");
    }
    if (!std::isfinite(prediction)) {
        throw std::invalid_argument("non-finite prediction rejected");
    }
    pending_prediction_ = prediction;
    pending_emission_ = emit(prediction);
    awaiting_outcome_ = true;
    return pending_emission_;
}

StreamStep OnlineIntervalAlgorithm::observe(double outcome) {
    if (!awaiting_outcome_) {
        throw std::logic_error("observe() called before predict()");
    }
    if (!std::isfinite(outcome)) {
        throw std::invalid_argument("non-finite outcome rejected");
    }
    StreamStep step;
    step.t = completed_ + 1;
    step.prediction = pending_prediction_;
    step.outcome = outcome;
    step.interval = pending_emission_.interval;
    step.theta = pending_emission_.theta;
    step.err = !pending_emission_.interval.contains(outcome);
    step.radius = current_radius(pending_prediction_, outcome);

    update(step);
    record(pending_prediction_, outcome);

    awaiting_outcome_ = false;
    ++completed_;
    return step;
}

std::vector<StreamStep> run_stream(OnlineIntervalAlgorithm& algorithm,
                                   std::span<const StepPair> pairs) {
    if (pairs.empty()) {
        throw std::invalid_argument("run_stream: empty input stream");
    }
    if (algorithm.steps_completed() != 0) {
        throw std::invalid_argument("run_stream: algorithm must be freshly initialized");
    }
    std::vector<StreamStep> steps;
    steps.reserve(pairs.size());
    for (const StepPair& pair : pairs) {
        algorithm.predict(pair.prediction);
        steps.push_back(algorithm.observe(pair.outcome));
    }
    return steps;
}

} // namespace conformal

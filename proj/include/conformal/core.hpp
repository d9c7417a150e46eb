#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace conformal {

/// Target empirical coverage level, alpha in (0, 1).
struct TargetLevel {
    double alpha;

    explicit TargetLevel(double a) : alpha(a) {
        if (!(a > 0.0 && a < 1.0)) {
            throw std::invalid_argument("TargetLevel: alpha must be in (0, 1)");
        }
    }

    double miscoverage() const { return 1.0 - alpha; }
};

/// Assumed upper bound D > 0 on all radii.
struct MaxRadius {
    double value;

    explicit MaxRadius(double d) : value(d) {
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw std::invalid_argument("MaxRadius: D must be positive and finite");
        }
    }
};

/// Closed interval [lower, upper]; bounds may be infinite.
struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;

    PredictionInterval() = default;
    PredictionInterval(double lo, double hi) : lower(lo), upper(hi) {
        if (!(lower <= upper)) {
            throw std::invalid_argument("PredictionInterval: lower must not exceed upper");
        }
    }

    double width() const { return upper - lower; }
    bool infinite_width() const { return std::isinf(lower) || std::isinf(upper); }

    // Closed membership: endpoints count as covered.
    bool contains(double y) const { return lower <= y && y <= upper; }
};

/// One completed step of the online protocol.
struct StreamStep {
    std::int64_t t = 0;          // 1-based step index
    double prediction = 0.0;     // point forecast available before the outcome
    double outcome = 0.0;        // realized value
    PredictionInterval interval; // interval emitted before the outcome was seen
    bool err = false;            // outcome fell outside the emitted interval
    double theta = 0.0;          // parameter behind the interval; NaN when not applicable
    double radius = 0.0;         // smallest parameter that would have covered the outcome
};

enum class Method { Aci, AgAci, Faci, SfOgd, Saocp };

enum class ConstructorKind { Linear, Quantile };

std::string to_string(Method m);
std::string to_string(ConstructorKind c);
std::optional<Method> parse_method(const std::string& name);
std::optional<ConstructorKind> parse_constructor(const std::string& name);

/// Full configuration of one online run.
struct RunConfig {
    Method method = Method::Aci;
    double alpha = 0.9;
    ConstructorKind constructor = ConstructorKind::Quantile;

    std::optional<double> theta1;       // default: alpha (quantile) or 0 (linear)
    std::optional<double> gamma;        // ACI learning rate; D/sqrt(3) for SF-OGD/SAOCP when D is set
    std::vector<double> gamma_grid;     // AgACI/FACI candidate rates; default grid when empty
    std::optional<MaxRadius> max_radius;
    int lifetime_multiplier = 8;        // SAOCP expert lifetime multiplier
    int interval_length = 100;          // FACI target interval length |I|
    bool faci_eta_miscoverage = false;  // substitute 1 - alpha into the closed-form eta

    double resolved_theta1() const {
        if (theta1) return *theta1;
        return constructor == ConstructorKind::Quantile ? alpha : 0.0;
    }

    std::vector<double> resolved_gamma_grid() const;
    void validate() const;
};

struct StepPair {
    double prediction = 0.0;
    double outcome = 0.0;
};

/// What an algorithm commits to before the outcome is revealed.
struct Emission {
    PredictionInterval interval;
    double theta = std::numeric_limits<double>::quiet_NaN();
};

/// Stateful predict-then-observe machine. predict() and observe() must
/// strictly alternate, starting with predict(); run_stream enforces this.
class OnlineIntervalAlgorithm {
public:
    virtual ~OnlineIntervalAlgorithm() = default;

    Emission predict(double prediction);
    StreamStep observe(double outcome);

    std::int64_t steps_completed() const { return completed_; }

protected:
    // Interval + theta for the current step, given the point prediction.
    virtual Emission emit(double prediction) = 0;
    // Method-specific state update once the outcome (and its radius/err) is known.
    virtual void update(const StreamStep& step) = 0;
    // Radius of the realized outcome under this machine's constructor.
    virtual double current_radius(double prediction, double outcome) const = 0;
    // Fold the observed pair into constructor state (e.g. append a score).
    virtual void record(double prediction, double outcome) = 0;

private:
    bool awaiting_outcome_ = false;
    double pending_prediction_ = 0.0;
    Emission pending_emission_;
    std::int64_t completed_ = 0;
};

/// Drives a freshly initialized algorithm over the whole stream, interval
/// first, outcome second, one step at a time.
std::vector<StreamStep> run_stream(OnlineIntervalAlgorithm& algorithm,
                                   std::span<const StepPair> pairs);

} // namespace conformal

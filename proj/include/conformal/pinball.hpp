#pragma once

#include <cmath>
#include <stdexcept>

#include "conformal/core.hpp"

namespace conformal {

/// Pinball (quantile) loss of a parameter theta against a realized radius r,
/// at coverage level alpha. The expected loss is minimized at the
/// alpha-quantile of the radii, so that a fixed optimal theta covers an
/// alpha fraction of outcomes. Equivalently:
///
///   L(theta, r) = (1 - alpha) * (theta - r)   if theta >= r
///                 alpha * (r - theta)         otherwise
///
/// which makes 1 - alpha - err a subgradient in theta (err = I[r > theta]).
inline double pinball_loss(double theta, double r, double alpha) {
    if (!std::isfinite(theta) || !std::isfinite(r)) {
        throw std::invalid_argument("pinball_loss: non-finite input");
    }
    return theta >= r ? (1.0 - alpha) * (theta - r) : alpha * (r - theta);
}

/// Subgradient of the pinball loss in theta, expressed through the error
/// indicator: 1 - alpha - err, which is -alpha on a miss and 1 - alpha on a
/// hit (the right-hand slope at theta = r).
inline double pinball_subgradient(bool err, double alpha) {
    return 1.0 - alpha - (err ? 1.0 : 0.0);
}

/// Same subgradient selected directly from the (theta, r) comparison, with
/// the boundary counting as covered.
inline double pinball_subgradient_at(double theta, double r, double alpha) {
    return pinball_subgradient(/*err=*/r > theta, alpha);
}

/// Pinball loss bound to a fixed level.
struct PinballLoss {
    TargetLevel alpha;

    explicit PinballLoss(TargetLevel a) : alpha(a) {}

    double operator()(double theta, double r) const {
        return pinball_loss(theta, r, alpha.alpha);
    }
};

} // namespace conformal

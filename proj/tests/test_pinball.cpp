#include <doctest.h>

#include "conformal/pinball.hpp"
#include "conformal/simgen.hpp"

using namespace conformal;

TEST_CASE("pinball values") {
    // Overshoot is charged at 1 - alpha, shortfall at alpha, so the
    // minimizing fixed theta is the alpha-quantile of the radii.
    CHECK(pinball_loss(1.0, 0.5, 0.8) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(pinball_loss(0.0, 1.0, 0.8) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(pinball_loss(0.7, 0.7, 0.8) == 0.0);
    CHECK(pinball_loss(0.7, 0.7, 0.31) == 0.0);
}

TEST_CASE("pinball is nonnegative, zero only at theta == r") {
    sim::SplitMix64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const double theta = 4.0 * rng.next_uniform() - 2.0;
        const double r = 4.0 * rng.next_uniform() - 2.0;
        const double alpha = 0.05 + 0.9 * rng.next_uniform();
        const double loss = pinball_loss(theta, r, alpha);
        CHECK(loss >= 0.0);
        if (theta != r) CHECK(loss > 0.0);
    }
}

TEST_CASE("pinball subgradient values") {
    CHECK(pinball_subgradient(true, 0.8) == doctest::Approx(-0.8).epsilon(1e-15));
    CHECK(pinball_subgradient(false, 0.8) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(pinball_subgradient(false, 0.5) == 0.5);
}

TEST_CASE("subgradient supports the loss from below") {
    sim::SplitMix64 rng(12);
    for (int i = 0; i < 300; ++i) {
        const double theta = 4.0 * rng.next_uniform() - 2.0;
        const double r = 4.0 * rng.next_uniform() - 2.0;
        const double alpha = 0.05 + 0.9 * rng.next_uniform();
        const double g = pinball_subgradient_at(theta, r, alpha);
        for (int k = 0; k <= 20; ++k) {
            const double probe = -3.0 + 6.0 * static_cast<double>(k) / 20.0;
            const double lhs = pinball_loss(probe, r, alpha);
            const double rhs = pinball_loss(theta, r, alpha) + g * (probe - theta);
            CHECK(lhs >= rhs - 1e-12);
        }
    }
}

TEST_CASE("pinball convexity") {
    sim::SplitMix64 rng(13);
    for (int i = 0; i < 300; ++i) {
        const double theta1 = 4.0 * rng.next_uniform() - 2.0;
        const double theta2 = 4.0 * rng.next_uniform() - 2.0;
        const double r = 4.0 * rng.next_uniform() - 2.0;
        const double alpha = 0.05 + 0.9 * rng.next_uniform();
        const double lambda = rng.next_uniform();
        const double mixed = lambda * theta1 + (1.0 - lambda) * theta2;
        const double lhs = pinball_loss(mixed, r, alpha);
        const double rhs = lambda * pinball_loss(theta1, r, alpha) +
                           (1.0 - lambda) * pinball_loss(theta2, r, alpha);
        CHECK(lhs <= rhs + 1e-12);
    }
}

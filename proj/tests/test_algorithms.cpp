#include <doctest.h>

#include <cmath>

#include "conformal/algorithms.hpp"
#include "conformal/simgen.hpp"

using namespace conformal;

TEST_CASE("aci_step") {
    const TargetLevel alpha(0.8);
    const AciState hit = aci_step({0.5, 0.1}, false, alpha);
    CHECK(hit.theta == doctest::Approx(0.48).epsilon(1e-15));
    const AciState miss = aci_step({0.5, 0.1}, true, alpha);
    CHECK(miss.theta == doctest::Approx(0.58).epsilon(1e-15));
    const AciState frozen = aci_step({0.5, 0.0}, true, alpha);
    CHECK(frozen.theta == 0.5);
}

TEST_CASE("aci increments take exactly two values") {
    const TargetLevel alpha(0.83);
    sim::SplitMix64 rng(5150);
    AciState state{0.2, 0.07};
    for (int i = 0; i < 2000; ++i) {
        const bool err = rng.next_uniform() < 0.3;
        const double up = state.theta + state.gamma * alpha.alpha;
        const double down = state.theta - state.gamma * (1.0 - alpha.alpha);
        state = aci_step(state, err, alpha);
        const bool matches_up = state.theta == up;
        const bool matches_down = state.theta == down;
        CHECK((matches_up || matches_down));
    }
}

TEST_CASE("sfogd_step") {
    const TargetLevel alpha(0.8);
    SfOgdState state{0.0, 1.0, 0.0};

    SUBCASE("first-step miss") {
        // g = -0.8, denominator sqrt(0.64) = 0.8
        const auto next = sfogd_step(state, true, alpha);
        CHECK(next.theta == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(next.grad_sq_sum == doctest::Approx(0.64).epsilon(1e-15));
    }
    SUBCASE("first-step hit") {
        const auto next = sfogd_step(state, false, alpha);
        CHECK(next.theta == doctest::Approx(-1.0).epsilon(1e-15));
    }
    SUBCASE("repeated misses shrink the increment") {
        const auto first = sfogd_step(state, true, alpha);
        const auto second = sfogd_step(first, true, alpha);
        const double inc1 = first.theta - state.theta;
        const double inc2 = second.theta - first.theta;
        CHECK(inc2 > 0.0);
        CHECK(inc2 < inc1);
        CHECK(inc2 == doctest::Approx(inc1 / std::sqrt(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("sfogd grad_sq_sum never decreases") {
    const TargetLevel alpha(0.6);
    sim::SplitMix64 rng(77);
    SfOgdState state{0.0, 0.5, 0.0};
    double prev = 0.0;
    for (int i = 0; i < 500; ++i) {
        state = sfogd_step(state, rng.next_uniform() < 0.4, alpha);
        CHECK(state.grad_sq_sum >= prev);
        prev = state.grad_sq_sum;
    }
}

TEST_CASE("faci closed-form eta") {
    // inner term at alpha = 0.8: 0.8^2 * 0.2^3 + 0.2^2 * 0.8^3 = 0.02560
    const double inner = 0.8 * 0.8 * 0.2 * 0.2 * 0.2 + 0.2 * 0.2 * 0.8 * 0.8 * 0.8;
    CHECK(inner == doctest::Approx(0.0256).epsilon(1e-14));

    const double eta = faci_eta_default(8, 100, 0.8);
    const double expected = std::sqrt(0.03) * std::sqrt((std::log(800.0) + 2.0) / inner);
    CHECK(eta == doctest::Approx(expected).epsilon(1e-12));

    // alpha = 0.5 inner term: 2 * (0.25 * 0.125)
    const double eta_half = faci_eta_default(8, 100, 0.5);
    const double inner_half = 2.0 * (0.25 * 0.125);
    CHECK(inner_half == 0.0625);
    CHECK(eta_half ==
          doctest::Approx(std::sqrt(0.03) * std::sqrt((std::log(800.0) + 2.0) / inner_half))
              .epsilon(1e-12));

    // eta -> 0 as the interval length grows (like sqrt(log I / I))
    CHECK(faci_eta_default(8, 10000, 0.8) < faci_eta_default(8, 100, 0.8));
    CHECK(faci_eta_default(8, 100000000, 0.8) < faci_eta_default(8, 10000, 0.8));
    CHECK(faci_eta_default(8, 100000000, 0.8) < 0.01);

    // the inner term is symmetric in alpha <-> 1 - alpha
    CHECK(faci_eta_default(8, 100, 0.2) == doctest::Approx(eta).epsilon(1e-14));
}

TEST_CASE("faci online eta") {
    const double base = std::log(100.0 * 8.0) + 2.0;
    CHECK(faci_eta_online(base, 8, 100) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(faci_eta_online(2.0 * base, 8, 100) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("saocp lifetimes") {
    CHECK(saocp_lifetime(1, 8) == 8);
    CHECK(saocp_lifetime(4, 8) == 32);
    CHECK(saocp_lifetime(6, 8) == 16);
    CHECK(saocp_lifetime(12, 2) == 8);
    CHECK_THROWS_AS(saocp_lifetime(0, 8), std::invalid_argument);
}

TEST_CASE("saocp prior") {
    const std::int64_t lone[] = {5};
    const auto single = saocp_prior(lone);
    CHECK(single.size() == 1);
    CHECK(single[0] == 1.0);

    const std::int64_t pair[] = {1, 2};
    const auto two = saocp_prior(pair);
    // unnormalized masses 1 and 1/(4 * 2)
    CHECK(two[0] == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
    CHECK(two[1] == doctest::Approx(1.0 / 9.0).epsilon(1e-14));

    // strictly decreasing in the birth index
    const std::int64_t run[] = {1, 2, 3, 4, 5, 6, 7, 8};
    const auto masses = saocp_prior(run);
    for (std::size_t i = 1; i < masses.size(); ++i) {
        CHECK(masses[i] < masses[i - 1]);
    }
}

TEST_CASE("boa combiner basics") {
    SUBCASE("identical experts stay uniform") {
        BoaCombiner boa(0.1, 3);
        sim::SplitMix64 rng(3);
        for (int i = 0; i < 50; ++i) {
            const double x = rng.next_normal();
            const double preds[] = {x, x, x};
            CHECK(boa.combine(preds) == doctest::Approx(x).epsilon(1e-12));
            boa.update(preds, rng.next_normal());
        }
        for (const double w : boa.weights()) {
            CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        }
    }

    SUBCASE("single expert passes through") {
        BoaCombiner boa(0.25, 1);
        const double preds[] = {1.5};
        CHECK(boa.combine(preds) == 1.5);
        boa.update(preds, 2.0);
        CHECK(boa.combine(preds) == 1.5);
    }

    SUBCASE("the better expert takes over") {
        // Outcomes ~ N(0,1); expert A sits at the target 0.1-quantile, expert
        // B far below it. A's quantile loss is strictly smaller on average.
        BoaCombiner boa(0.1, 2);
        sim::SplitMix64 rng(321);
        for (int i = 0; i < 400; ++i) {
            const double preds[] = {-1.2816, -15.0};
            boa.update(preds, rng.next_normal());
        }
        const auto w = boa.weights();
        CHECK(w[0] > 0.95);
    }

    SUBCASE("combination stays in the expert envelope") {
        BoaCombiner boa(0.9, 4);
        sim::SplitMix64 rng(9);
        for (int i = 0; i < 200; ++i) {
            double preds[4];
            double lo = 1e300;
            double hi = -1e300;
            for (double& p : preds) {
                p = rng.next_normal();
                lo = std::min(lo, p);
                hi = std::max(hi, p);
            }
            const double combined = boa.combine(preds);
            CHECK(combined >= lo - 1e-12);
            CHECK(combined <= hi + 1e-12);
            boa.update(preds, rng.next_normal());
            for (const double w : boa.weights()) CHECK(w >= 0.0);
        }
    }

    SUBCASE("skips non-finite steps") {
        BoaCombiner boa(0.5, 2);
        const double preds[] = {-std::numeric_limits<double>::infinity(), 0.0};
        boa.update(preds, 1.0);
        CHECK(boa.skipped_updates() == 1);
        for (const double w : boa.weights()) {
            CHECK(w == doctest::Approx(0.5).epsilon(1e-14));
        }
    }
}

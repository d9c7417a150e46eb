#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "conformal/core.hpp"

namespace conformal::sim {

/// SplitMix64: tiny counter-based generator, bit-identical for a given seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via the Marsaglia polar transform (pairs cached).
    double next_normal();

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a salt.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

/// ARMA(1,1) noise with AR coefficient psi, MA coefficient xi, and the
/// innovation variance scaled so the process variance is approximately
/// scale_s.
struct ArmaSpec {
    double psi = 0.0;
    double xi = 0.0;
    double scale_s = 10.0;
    std::int64_t length = 0;
    std::int64_t burn_in = 100;

    double innovation_sd() const;
    void validate() const;
};

std::vector<double> gen_arma_noise(const ArmaSpec& spec, std::uint64_t seed);

/// Friedman regression surface on six i.i.d. uniform features; the sixth
/// feature carries zero weight.
struct FriedmanSpec {
    std::int64_t length = 600;
    static constexpr int feature_count = 6;
};

struct FriedmanRow {
    std::array<double, FriedmanSpec::feature_count> features{};
    double mean = 0.0;
    double outcome = 0.0;
};

double friedman_mean(std::span<const double> features);

std::vector<FriedmanRow> gen_friedman(const FriedmanSpec& spec, const ArmaSpec& arma,
                                      std::uint64_t seed);

/// Exact conditional-mean predictor for the Friedman surface (substitute for
/// a fitted model, isolating the interval layer).
double oracle_predictor(std::span<const double> features);

/// Independent Gaussian outcomes whose standard deviation jumps by
/// shift_delta after shift_point; predictions are identically zero.
struct ShiftSpec {
    std::int64_t length = 500;
    double base_sigma = 0.2;
    double shift_delta = 0.0;
    std::int64_t shift_point = 250;
};

std::vector<StepPair> gen_shift_stream(const ShiftSpec& spec, std::uint64_t seed);

/// Max absolute residual over a 1-based inclusive window; a degenerate zero
/// maximum is floored at 1e-9 so that derived learning rates stay positive.
MaxRadius estimate_D(std::span<const double> residuals, std::int64_t window_start,
                     std::int64_t window_end);

/// Online ridge regression on the raw features plus an intercept; a
/// deliberately weaker stand-in predictor for the Friedman study.
class RidgeRegressor {
public:
    explicit RidgeRegressor(int feature_count, double lambda = 1.0);

    double predict(std::span<const double> features) const;
    void observe(std::span<const double> features, double outcome);

private:
    int dim_; // features + intercept
    double lambda_;
    std::vector<double> gram_;   // dim x dim, row-major
    std::vector<double> moment_; // X^T y
    std::int64_t count_ = 0;
};

} // namespace conformal::sim

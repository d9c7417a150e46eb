#include "conformal/simgen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace conformal::sim {

double SplitMix64::next_normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Marsaglia polar method: rejection-sample a point in the unit disk.
    while (true) {
        const double u = 2.0 * next_uniform() - 1.0;
        const double v = 2.0 * next_uniform() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            const double factor = std::sqrt(-2.0 * std::log(s) / s);
            spare_ = v * factor;
            have_spare_ = true;
            return u * factor;
        }
    }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    SplitMix64 mixer(base ^ (salt * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
    return mixer.next_u64();
}

double ArmaSpec::innovation_sd() const {
    const double denom = 1.0 + 2.0 * psi * xi + xi * xi;
    return std::sqrt(scale_s * (1.0 - psi * psi) / denom);
}

void ArmaSpec::validate() const {
    if (!(std::abs(psi) < 1.0)) {
        throw std::invalid_argument("ArmaSpec: |psi| must be < 1 (stationarity)");
    }
    if (!(scale_s > 0.0)) {
        throw std::invalid_argument("ArmaSpec: scale must be positive");
    }
    if (length < 1 || burn_in < 0) {
        throw std::invalid_argument("ArmaSpec: bad length or burn-in");
    }
}

std::vector<double> gen_arma_noise(const ArmaSpec& spec, std::uint64_t seed) {
    spec.validate();
    SplitMix64 rng(seed);
    const double sd = spec.innovation_sd();

    std::vector<double> series;
    series.reserve(spec.length);
    double prev_eps = 0.0;
    double prev_innov = 0.0;
    for (std::int64_t t = 0; t < spec.burn_in + spec.length; ++t) {
        const double innov = sd * rng.next_normal();
        const double eps = spec.psi * prev_eps + innov + spec.xi * prev_innov;
        prev_eps = eps;
        prev_innov = innov;
        if (t >= spec.burn_in) series.push_back(eps);
    }
    return series;
}

double friedman_mean(std::span<const double> features) {
    if (features.size() != FriedmanSpec::feature_count) {
        throw std::invalid_argument("friedman_mean: expected six features");
    }
    return 10.0 * std::sin(std::numbers::pi * features[0] * features[1]) +
           20.0 * (features[2] - 0.5) * (features[2] - 0.5) + 10.0 * features[3] +
           5.0 * features[4] + 0.0 * features[5];
}

std::vector<FriedmanRow> gen_friedman(const FriedmanSpec& spec, const ArmaSpec& arma,
                                      std::uint64_t seed) {
    ArmaSpec noise_spec = arma;
    noise_spec.length = spec.length;
    const auto noise = gen_arma_noise(noise_spec, derive_seed(seed, 0x61726d61));

    SplitMix64 rng(derive_seed(seed, 0x66656174));
    std::vector<FriedmanRow> rows;
    rows.reserve(spec.length);
    for (std::int64_t t = 0; t < spec.length; ++t) {
        FriedmanRow row;
        for (double& x : row.features) x = rng.next_uniform();
        row.mean = friedman_mean(row.features);
        row.outcome = row.mean + noise[t];
        rows.push_back(row);
    }
    return rows;
}

double oracle_predictor(std::span<const double> features) {
    return friedman_mean(features);
}

std::vector<StepPair> gen_shift_stream(const ShiftSpec& spec, std::uint64_t seed) {
    if (spec.length < 1 || !(spec.base_sigma > 0.0) || spec.shift_delta < 0.0) {
        throw std::invalid_argument("ShiftSpec: bad parameters");
    }
    SplitMix64 rng(seed);
    std::vector<StepPair> pairs;
    pairs.reserve(spec.length);
    for (std::int64_t t = 1; t <= spec.length; ++t) {
        const double sigma =
            spec.base_sigma + (t > spec.shift_point ? spec.shift_delta : 0.0);
        pairs.push_back({0.0, sigma * rng.next_normal()});
    }
    return pairs;
}

MaxRadius estimate_D(std::span<const double> residuals, std::int64_t window_start,
                     std::int64_t window_end) {
    const auto n = static_cast<std::int64_t>(residuals.size());
    if (window_start < 1 || window_end > n || window_start > window_end) {
        throw std::invalid_argument("estimate_D: empty or out-of-range window");
    }
    double max_abs = 0.0;
    for (std::int64_t t = window_start; t <= window_end; ++t) {
        max_abs = std::max(max_abs, std::abs(residuals[t - 1]));
    }
    if (max_abs <= 0.0) {
        max_abs = 1e-9; // degenerate window; keep derived rates positive
    }
    return MaxRadius(max_abs);
}

RidgeRegressor::RidgeRegressor(int feature_count, double lambda)
    : dim_(feature_count + 1), lambda_(lambda) {
    if (feature_count < 1 || !(lambda > 0.0)) {
        throw std::invalid_argument("RidgeRegressor: bad configuration");
    }
    gram_.assign(static_cast<std::size_t>(dim_) * dim_, 0.0);
    moment_.assign(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) gram_[static_cast<std::size_t>(i) * dim_ + i] = lambda_;
}

void RidgeRegressor::observe(std::span<const double> features, double outcome) {
    if (static_cast<int>(features.size()) + 1 != dim_) {
        throw std::invalid_argument("RidgeRegressor: feature count mismatch");
    }
    std::vector<double> x(dim_);
    for (int i = 0; i + 1 < dim_; ++i) x[i] = features[i];
    x[dim_ - 1] = 1.0;
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            gram_[static_cast<std::size_t>(i) * dim_ + j] += x[i] * x[j];
        }
        moment_[i] += x[i] * outcome;
    }
    ++count_;
}

double RidgeRegressor::predict(std::span<const double> features) const {
    if (static_cast<int>(features.size()) + 1 != dim_) {
        throw std::invalid_argument("RidgeRegressor: feature count mismatch");
    }
    if (count_ == 0) return 0.0;

    // Solve (gram) w = moment by Cholesky; the ridge term keeps it SPD.
    const int n = dim_;
    std::vector<double> chol(gram_);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = chol[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k) {
                sum -= chol[static_cast<std::size_t>(i) * n + k] *
                       chol[static_cast<std::size_t>(j) * n + k];
            }
            if (i == j) {
                chol[static_cast<std::size_t>(i) * n + j] = std::sqrt(sum);
            } else {
                chol[static_cast<std::size_t>(i) * n + j] =
                    sum / chol[static_cast<std::size_t>(j) * n + j];
            }
        }
    }
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        double sum = moment_[i];
        for (int k = 0; k < i; ++k) sum -= chol[static_cast<std::size_t>(i) * n + k] * y[k];
        y[i] = sum / chol[static_cast<std::size_t>(i) * n + i];
    }
    std::vector<double> w(n);
    for (int i = n - 1; i >= 0; --i) {
        double sum = y[i];
        for (int k = i + 1; k < n; ++k) sum -= chol[static_cast<std::size_t>(k) * n + i] * w[k];
        w[i] = sum / chol[static_cast<std::size_t>(i) * n + i];
    }
    double out = w[n - 1];
    for (int i = 0; i + 1 < n; ++i) out += w[i] * features[i];
    return out;
}

} // namespace conformal::sim

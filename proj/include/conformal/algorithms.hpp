#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "conformal/constructors.hpp"
#include "conformal/core.hpp"
#include "conformal/pinball.hpp"

namespace conformal {

// --- single-expert update rules ----------------------------------------------

struct AciState {
    double theta = 0.0;
    double gamma = 0.0;
};

/// theta <- theta + gamma * (err - (1 - alpha)), computed branchwise so the
/// increment is exactly +gamma*alpha on a miss and -gamma*(1-alpha) on a hit.
AciState aci_step(AciState state, bool err, TargetLevel alpha);

struct SfOgdState {
    double theta = 0.0;
    double gamma = 0.0;
    double grad_sq_sum = 0.0;
};

/// Scale-free gradient step: the current subgradient enters the running sum
/// before the division, so the first denominator is |g| itself.
SfOgdState sfogd_step(SfOgdState state, bool err, TargetLevel alpha);

// --- FACI learning-rate rules -------------------------------------------------

/// Closed-form eta, recommended with the quantile constructor.
double faci_eta_default(std::size_t num_experts, int interval_length, double alpha);

/// Online eta from the trailing window of incurred pinball losses, used with
/// the linear constructor. Falls back to the closed form when the window is
/// empty or sums to zero.
double faci_eta_online(double window_loss_sum, std::size_t num_experts, int interval_length);

// --- SAOCP expert scheduling ---------------------------------------------------

/// Lifetime of the expert born at step birth_index: multiplier times the
/// largest power of two dividing the birth index.
std::int64_t saocp_lifetime(std::int64_t birth_index, int multiplier);

/// Prior mass over active experts indexed by birth step:
/// birth^-2 * (1 + floor(log2 birth))^-1, normalized. Seasoned experts carry
/// more prior mass than the freshly spawned (and still jumpy) ones; the
/// learned weights handle adaptation.
std::vector<double> saocp_prior(std::span<const std::int64_t> births);

// --- BOA combiner (AgACI) -------------------------------------------------------

/// Bernstein online aggregation of scalar expert predictions under the
/// quantile loss at a fixed level. Second-order recursion with per-expert
/// adaptive rates; predictions are always convex combinations of the experts.
class BoaCombiner {
public:
    BoaCombiner(double quantile_level, std::size_t num_experts);

    double combine(std::span<const double> expert_predictions) const;
    void update(std::span<const double> expert_predictions, double outcome);

    std::vector<double> weights() const;
    double quantile_level() const { return level_; }
    std::int64_t skipped_updates() const { return skipped_; }

private:
    double level_;
    std::size_t num_experts_;
    std::vector<double> adjusted_loss_; // sum of centered losses with second-order term
    std::vector<double> loss_sq_sum_;   // V_k
    std::vector<double> loss_range_;    // E_k
    std::vector<double> rate_;          // eta_k from the latest update
    bool updated_ = false;
    std::int64_t skipped_ = 0;
};

// --- online machines -------------------------------------------------------------

class AciMachine final : public OnlineIntervalAlgorithm {
public:
    AciMachine(TargetLevel alpha, double gamma, double theta1,
               std::unique_ptr<IntervalRule> rule);

    double theta() const { return state_.theta; }

protected:
    Emission emit(double prediction) override;
    void update(const StreamStep& step) override;
    double current_radius(double prediction, double outcome) const override;
    void record(double prediction, double outcome) override;

private:
    TargetLevel alpha_;
    AciState state_;
    std::unique_ptr<IntervalRule> rule_;
};

class SfOgdMachine final : public OnlineIntervalAlgorithm {
public:
    SfOgdMachine(TargetLevel alpha, double gamma, double theta1,
                 std::unique_ptr<IntervalRule> rule);

    const SfOgdState& state() const { return state_; }

protected:
    Emission emit(double prediction) override;
    void update(const StreamStep& step) override;
    double current_radius(double prediction, double outcome) const override;
    void record(double prediction, double outcome) override;

private:
    TargetLevel alpha_;
    SfOgdState state_;
    std::unique_ptr<IntervalRule> rule_;
};

class FaciMachine final : public OnlineIntervalAlgorithm {
public:
    /// fixed_eta: closed-form rate (quantile constructor); when absent the
    /// online window rule is used (linear constructor). sigma is the
    /// uniform-mixing share, 1/(2|I|) by default.
    FaciMachine(TargetLevel alpha, std::vector<double> gamma_grid, double theta1,
                int interval_length, double sigma, std::optional<double> fixed_eta,
                std::unique_ptr<IntervalRule> rule);

    std::vector<double> probabilities() const;
    std::vector<double> expert_thetas() const;
    double sigma() const { return sigma_; }
    /// The rate the next weight update will use (fixed, or derived from the
    /// trailing loss window with the closed-form fallback).
    double effective_eta() const { return current_eta(); }
    double last_mix_input_sum() const { return last_mix_input_sum_; }
    double last_mix_output_sum() const { return last_mix_output_sum_; }

protected:
    Emission emit(double prediction) override;
    void update(const StreamStep& step) override;
    double current_radius(double prediction, double outcome) const override;
    void record(double prediction, double outcome) override;

private:
    double current_eta() const;

    TargetLevel alpha_;
    std::vector<AciState> experts_;
    std::vector<double> weights_;
    double sigma_;
    int interval_length_;
    std::optional<double> fixed_eta_;
    double fallback_eta_;
    std::deque<double> loss_window_;
    std::unique_ptr<IntervalRule> rule_;
    double last_mix_input_sum_ = 0.0;
    double last_mix_output_sum_ = 0.0;
};

class SaocpMachine final : public OnlineIntervalAlgorithm {
public:
    SaocpMachine(TargetLevel alpha, double gamma, MaxRadius max_radius, double theta0,
                 int lifetime_multiplier, std::unique_ptr<IntervalRule> rule);

    std::vector<std::int64_t> active_births() const;
    std::vector<double> active_thetas() const;
    const std::vector<double>& last_g_values() const { return last_g_; }
    std::int64_t radius_bound_violations() const { return radius_violations_; }

protected:
    Emission emit(double prediction) override;
    void update(const StreamStep& step) override;
    double current_radius(double prediction, double outcome) const override;
    void record(double prediction, double outcome) override;

private:
    struct Expert {
        std::int64_t birth = 0;
        std::int64_t expiry = 0; // first step at which the expert is no longer active
        SfOgdState state;
        double weight = 0.0;
        double g_sum = 0.0;
        double wg_sum = 0.0;
    };

    TargetLevel alpha_;
    double gamma_;
    double max_radius_;
    int lifetime_multiplier_;
    std::deque<Expert> experts_; // active experts, ordered by birth
    double last_emitted_theta_;  // theta_{t-1}, seeds newborn experts
    std::vector<double> last_g_;
    std::int64_t radius_violations_ = 0;
    std::unique_ptr<IntervalRule> rule_;
};

class AgaciMachine final : public OnlineIntervalAlgorithm {
public:
    AgaciMachine(TargetLevel alpha, std::vector<double> gamma_grid, double theta1,
                 std::unique_ptr<IntervalRule> rule);

    const std::vector<double>& last_candidate_lowers() const { return lowers_; }
    const std::vector<double>& last_candidate_uppers() const { return uppers_; }
    double last_aggregated_lower() const { return aggregated_lower_; }
    double last_aggregated_upper() const { return aggregated_upper_; }
    std::int64_t crossing_count() const { return crossings_; }
    const BoaCombiner& lower_combiner() const { return boa_lower_; }
    const BoaCombiner& upper_combiner() const { return boa_upper_; }
    std::vector<double> expert_thetas() const;

protected:
    Emission emit(double prediction) override;
    void update(const StreamStep& step) override;
    double current_radius(double prediction, double outcome) const override;
    void record(double prediction, double outcome) override;

private:
    TargetLevel alpha_;
    std::vector<AciState> experts_;
    BoaCombiner boa_lower_;
    BoaCombiner boa_upper_;
    std::unique_ptr<IntervalRule> rule_;
    std::vector<double> lowers_;
    std::vector<double> uppers_;
    double aggregated_lower_ = 0.0;
    double aggregated_upper_ = 0.0;
    std::int64_t crossings_ = 0;
};

/// Builds the machine described by the config, resolving defaulted
/// parameters (theta1, gamma, gamma grid, FACI eta rule).
std::unique_ptr<OnlineIntervalAlgorithm> make_algorithm(const RunConfig& config);

} // namespace conformal

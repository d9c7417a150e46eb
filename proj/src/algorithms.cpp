#include "conformal/algorithms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace conformal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Pinball loss with the convention that steps carrying a non-finite radius
// (the always-cover warm-up of the quantile constructor) incur zero loss for
// every candidate, so weight updates are no-ops on those steps.
double safe_loss(double theta, double r, double alpha) {
    if (!std::isfinite(r)) return 0.0;
    return pinball_loss(theta, r, alpha);
}

} // namespace

AciState aci_step(AciState state, bool err, TargetLevel alpha) {
    state.theta += err ? state.gamma * alpha.alpha
                       : -(state.gamma * (1.0 - alpha.alpha));
    return state;
}

SfOgdState sfogd_step(SfOgdState state, bool err, TargetLevel alpha) {
    const double g = pinball_subgradient(err, alpha.alpha);
    state.grad_sq_sum += g * g;
    state.theta -= state.gamma * g / std::sqrt(state.grad_sq_sum);
    return state;
}

double faci_eta_default(std::size_t num_experts, int interval_length, double alpha) {
    const double k = static_cast<double>(num_experts);
    const double len = static_cast<double>(interval_length);
    const double inner = alpha * alpha * std::pow(1.0 - alpha, 3) +
                         (1.0 - alpha) * (1.0 - alpha) * std::pow(alpha, 3);
    return std::sqrt(3.0 / len) * std::sqrt((std::log(k * len) + 2.0) / inner);
}

double faci_eta_online(double window_loss_sum, std::size_t num_experts, int interval_length) {
    const double k = static_cast<double>(num_experts);
    const double len = static_cast<double>(interval_length);
    return std::sqrt((std::log(len * k) + 2.0) / window_loss_sum);
}

std::int64_t saocp_lifetime(std::int64_t birth_index, int multiplier) {
    if (birth_index < 1) throw std::invalid_argument("saocp_lifetime: birth index must be >= 1");
    return static_cast<std::int64_t>(multiplier) * (birth_index & -birth_index);
}

std::vector<double> saocp_prior(std::span<const std::int64_t> births) {
    if (births.empty()) throw std::invalid_argument("saocp_prior: empty active set");
    std::vector<double> prior(births.size());
    double total = 0.0;
    for (std::size_t i = 0; i < births.size(); ++i) {
        const auto birth = static_cast<std::uint64_t>(births[i]);
        const double b = static_cast<double>(birth);
        const int log2_floor = std::bit_width(birth) - 1;
        prior[i] = 1.0 / (b * b * (1.0 + static_cast<double>(log2_floor)));
        total += prior[i];
    }
    for (double& p : prior) p /= total;
    return prior;
}

// --- BoaCombiner ------------------------------------------------------------------

BoaCombiner::BoaCombiner(double quantile_level, std::size_t num_experts)
    : level_(quantile_level),
      num_experts_(num_experts),
      adjusted_loss_(num_experts, 0.0),
      loss_sq_sum_(num_experts, 0.0),
      loss_range_(num_experts, 0.0),
      rate_(num_experts, 1.0) {
    if (!(quantile_level > 0.0 && quantile_level < 1.0)) {
        throw std::invalid_argument("BoaCombiner: quantile level must be in (0, 1)");
    }
    if (num_experts == 0) {
        throw std::invalid_argument("BoaCombiner: need at least one expert");
    }
}

std::vector<double> BoaCombiner::weights() const {
    const double uniform = 1.0 / static_cast<double>(num_experts_);
    if (!updated_) return std::vector<double>(num_experts_, uniform);

    // w_k proportional to pi_k * eta_k * exp(-eta_k * adjusted_loss_k),
    // evaluated in log space with the common maximum subtracted.
    std::vector<double> log_w(num_experts_);
    double max_log = -kInf;
    for (std::size_t k = 0; k < num_experts_; ++k) {
        log_w[k] = std::log(uniform * rate_[k]) - rate_[k] * adjusted_loss_[k];
        max_log = std::max(max_log, log_w[k]);
    }
    std::vector<double> w(num_experts_);
    double total = 0.0;
    for (std::size_t k = 0; k < num_experts_; ++k) {
        w[k] = std::exp(log_w[k] - max_log);
        total += w[k];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        return std::vector<double>(num_experts_, uniform);
    }
    for (double& x : w) x /= total;
    return w;
}

double BoaCombiner::combine(std::span<const double> expert_predictions) const {
    if (expert_predictions.size() != num_experts_) {
        throw std::invalid_argument("BoaCombiner: prediction count mismatch");
    }
    const auto w = weights();
    double out = 0.0;
    for (std::size_t k = 0; k < num_experts_; ++k) {
        if (w[k] == 0.0) continue;
        out += w[k] * expert_predictions[k];
    }
    return out;
}

void BoaCombiner::update(std::span<const double> expert_predictions, double outcome) {
    if (expert_predictions.size() != num_experts_) {
        throw std::invalid_argument("BoaCombiner: prediction count mismatch");
    }
    const double aggregated = combine(expert_predictions);
    bool finite = std::isfinite(aggregated) && std::isfinite(outcome);
    for (const double x : expert_predictions) finite = finite && std::isfinite(x);
    if (!finite) {
        // No usable loss information this step (infinite warm-up bounds).
        ++skipped_;
        return;
    }

    const double agg_loss = pinball_loss(aggregated, outcome, level_);
    const double log_k = std::log(static_cast<double>(num_experts_));
    for (std::size_t k = 0; k < num_experts_; ++k) {
        const double centered =
            pinball_loss(expert_predictions[k], outcome, level_) - agg_loss;
        loss_sq_sum_[k] += centered * centered;
        loss_range_[k] = std::max(loss_range_[k], std::abs(centered));

        const double range_term = loss_range_[k] > 0.0 ? 1.0 / loss_range_[k] : kInf;
        const double var_term =
            loss_sq_sum_[k] > 0.0 ? std::sqrt(log_k / loss_sq_sum_[k]) : kInf;
        double eta = std::min(range_term, var_term);
        if (!std::isfinite(eta)) eta = 1.0; // no signal observed yet
        rate_[k] = eta;

        adjusted_loss_[k] += centered * (1.0 + eta * centered);
    }
    updated_ = true;
}

// --- AciMachine --------------------------------------------------------------------

AciMachine::AciMachine(TargetLevel alpha, double gamma, double theta1,
                       std::unique_ptr<IntervalRule> rule)
    : alpha_(alpha), state_{theta1, gamma}, rule_(std::move(rule)) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("AciMachine: gamma must be nonnegative and finite");
    }
}

Emission AciMachine::emit(double prediction) {
    return {rule_->make(prediction, state_.theta), state_.theta};
}

void AciMachine::update(const StreamStep& step) {
    state_ = aci_step(state_, step.err, alpha_);
}

double AciMachine::current_radius(double prediction, double outcome) const {
    return rule_->radius(prediction, outcome);
}

void AciMachine::record(double prediction, double outcome) {
    rule_->record(prediction, outcome);
}

// --- SfOgdMachine --------------------------------------------------------------------

SfOgdMachine::SfOgdMachine(TargetLevel alpha, double gamma, double theta1,
                           std::unique_ptr<IntervalRule> rule)
    : alpha_(alpha), state_{theta1, gamma, 0.0}, rule_(std::move(rule)) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("SfOgdMachine: gamma must be positive and finite");
    }
}

Emission SfOgdMachine::emit(double prediction) {
    return {rule_->make(prediction, state_.theta), state_.theta};
}

void SfOgdMachine::update(const StreamStep& step) {
    state_ = sfogd_step(state_, step.err, alpha_);
}

double SfOgdMachine::current_radius(double prediction, double outcome) const {
    return rule_->radius(prediction, outcome);
}

void SfOgdMachine::record(double prediction, double outcome) {
    rule_->record(prediction, outcome);
}

// --- FaciMachine --------------------------------------------------------------------

FaciMachine::FaciMachine(TargetLevel alpha, std::vector<double> gamma_grid, double theta1,
                         int interval_length, double sigma, std::optional<double> fixed_eta,
                         std::unique_ptr<IntervalRule> rule)
    : alpha_(alpha),
      sigma_(sigma),
      interval_length_(interval_length),
      fixed_eta_(fixed_eta),
      rule_(std::move(rule)) {
    if (gamma_grid.empty()) {
        throw std::invalid_argument("FaciMachine: need at least one learning rate");
    }
    if (!(sigma >= 0.0 && sigma <= 1.0)) {
        throw std::invalid_argument("FaciMachine: sigma must be in [0, 1]");
    }
    const auto k = gamma_grid.size();
    experts_.reserve(k);
    for (const double gamma : gamma_grid) {
        experts_.push_back(AciState{theta1, gamma});
    }
    weights_.assign(k, 1.0 / static_cast<double>(k));
    fallback_eta_ = faci_eta_default(k, interval_length_, alpha_.alpha);
}

std::vector<double> FaciMachine::probabilities() const {
    double total = 0.0;
    for (const double w : weights_) total += w;
    std::vector<double> p(weights_.size());
    for (std::size_t k = 0; k < weights_.size(); ++k) p[k] = weights_[k] / total;
    return p;
}

std::vector<double> FaciMachine::expert_thetas() const {
    std::vector<double> thetas(experts_.size());
    for (std::size_t k = 0; k < experts_.size(); ++k) thetas[k] = experts_[k].theta;
    return thetas;
}

double FaciMachine::current_eta() const {
    if (fixed_eta_) return *fixed_eta_;
    double window_sum = 0.0;
    for (const double loss : loss_window_) window_sum += loss;
    if (loss_window_.empty() || !(window_sum > 0.0)) return fallback_eta_;
    return faci_eta_online(window_sum, experts_.size(), interval_length_);
}

Emission FaciMachine::emit(double prediction) {
    const auto p = probabilities();
    double theta = 0.0;
    for (std::size_t k = 0; k < experts_.size(); ++k) theta += p[k] * experts_[k].theta;
    return {rule_->make(prediction, theta), theta};
}

void FaciMachine::update(const StreamStep& step) {
    const double r = step.radius;
    const double eta = current_eta();
    const std::size_t k_count = experts_.size();

    std::vector<double> mixed(k_count);
    double mix_in_sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        const double loss = safe_loss(experts_[k].theta, r, alpha_.alpha);
        mixed[k] = weights_[k] * std::exp(-eta * loss);
        mix_in_sum += mixed[k];
    }
    if (!(mix_in_sum > 0.0)) {
        // exp underflowed for every expert (enormous eta); keep the previous
        // ratios so the weight vector never becomes all-zero
        mixed = weights_;
        mix_in_sum = 0.0;
        for (const double w : mixed) mix_in_sum += w;
    }
    double mix_out_sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        weights_[k] = (1.0 - sigma_) * mixed[k] +
                      mix_in_sum * sigma_ / static_cast<double>(k_count);
        mix_out_sum += weights_[k];
    }
    last_mix_input_sum_ = mix_in_sum;
    last_mix_output_sum_ = mix_out_sum;

    // Keep the weight scale away from underflow; probabilities are unchanged.
    if (mix_out_sum < 1e-250) {
        for (double& w : weights_) w *= 1e250;
    }

    for (std::size_t k = 0; k < k_count; ++k) {
        const bool covered =
            rule_->covers(step.prediction, step.outcome, experts_[k].theta);
        experts_[k] = aci_step(experts_[k], !covered, alpha_);
    }

    loss_window_.push_back(safe_loss(step.theta, r, alpha_.alpha));
    while (loss_window_.size() > static_cast<std::size_t>(interval_length_)) {
        loss_window_.pop_front();
    }
}

double FaciMachine::current_radius(double prediction, double outcome) const {
    return rule_->radius(prediction, outcome);
}

void FaciMachine::record(double prediction, double outcome) {
    rule_->record(prediction, outcome);
}

// --- SaocpMachine --------------------------------------------------------------------

SaocpMachine::SaocpMachine(TargetLevel alpha, double gamma, MaxRadius max_radius,
                           double theta0, int lifetime_multiplier,
                           std::unique_ptr<IntervalRule> rule)
    : alpha_(alpha),
      gamma_(gamma),
      max_radius_(max_radius.value),
      lifetime_multiplier_(lifetime_multiplier),
      last_emitted_theta_(theta0),
      rule_(std::move(rule)) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("SaocpMachine: gamma must be positive and finite");
    }
}

std::vector<std::int64_t> SaocpMachine::active_births() const {
    std::vector<std::int64_t> births;
    births.reserve(experts_.size());
    for (const Expert& e : experts_) births.push_back(e.birth);
    return births;
}

std::vector<double> SaocpMachine::active_thetas() const {
    std::vector<double> thetas;
    thetas.reserve(experts_.size());
    for (const Expert& e : experts_) thetas.push_back(e.state.theta);
    return thetas;
}

Emission SaocpMachine::emit(double prediction) {
    const std::int64_t t = steps_completed() + 1;

    // Expiries are not monotone in birth order (lifetimes depend on the
    // birth index's power-of-two factor), so expired experts can sit
    // anywhere in the deque.
    std::erase_if(experts_, [t](const Expert& e) { return e.expiry <= t; });
    Expert newborn;
    newborn.birth = t;
    newborn.expiry = t + saocp_lifetime(t, lifetime_multiplier_);
    newborn.state = SfOgdState{last_emitted_theta_, gamma_, 0.0};
    experts_.push_back(newborn);

    double theta = 0.0;
    if (t >= 2) {
        std::vector<std::int64_t> births;
        births.reserve(experts_.size());
        for (const Expert& e : experts_) births.push_back(e.birth);
        const auto prior = saocp_prior(births);

        double clipped_total = 0.0;
        std::vector<double> p(experts_.size());
        for (std::size_t i = 0; i < experts_.size(); ++i) {
            p[i] = prior[i] * std::max(experts_[i].weight, 0.0);
            clipped_total += p[i];
        }
        if (clipped_total > 0.0) {
            for (double& x : p) x /= clipped_total;
        } else {
            p = prior;
        }
        for (std::size_t i = 0; i < experts_.size(); ++i) {
            theta += p[i] * experts_[i].state.theta;
        }
    }
    return {rule_->make(prediction, theta), theta};
}

void SaocpMachine::update(const StreamStep& step) {
    const double r = step.radius;
    if (std::isfinite(r) && r >= max_radius_) {
        ++radius_violations_; // logged, not fatal; 1/D scaling stays as configured
    }
    const double emitted_loss = safe_loss(step.theta, r, alpha_.alpha);

    last_g_.clear();
    for (Expert& e : experts_) {
        const double expert_theta = e.state.theta;
        const double gap = (emitted_loss - safe_loss(expert_theta, r, alpha_.alpha)) / max_radius_;
        const double g = e.weight > 0.0 ? gap : std::max(gap, 0.0);
        last_g_.push_back(g);

        e.wg_sum += e.weight * g;
        e.g_sum += g;
        const auto age = static_cast<double>(step.t - e.birth + 1);
        e.weight = (e.g_sum / age) * (1.0 + e.wg_sum);

        const bool covered = rule_->covers(step.prediction, step.outcome, expert_theta);
        e.state = sfogd_step(e.state, !covered, alpha_);
    }
    last_emitted_theta_ = step.theta;
}

double SaocpMachine::current_radius(double prediction, double outcome) const {
    return rule_->radius(prediction, outcome);
}

void SaocpMachine::record(double prediction, double outcome) {
    rule_->record(prediction, outcome);
}

// --- AgaciMachine --------------------------------------------------------------------

AgaciMachine::AgaciMachine(TargetLevel alpha, std::vector<double> gamma_grid, double theta1,
                           std::unique_ptr<IntervalRule> rule)
    : alpha_(alpha),
      boa_lower_((1.0 - alpha.alpha) / 2.0, gamma_grid.size()),
      boa_upper_(1.0 - (1.0 - alpha.alpha) / 2.0, gamma_grid.size()),
      rule_(std::move(rule)) {
    if (gamma_grid.empty()) {
        throw std::invalid_argument("AgaciMachine: need at least one learning rate");
    }
    experts_.reserve(gamma_grid.size());
    for (const double gamma : gamma_grid) {
        experts_.push_back(AciState{theta1, gamma});
    }
    lowers_.resize(experts_.size());
    uppers_.resize(experts_.size());
}

std::vector<double> AgaciMachine::expert_thetas() const {
    std::vector<double> thetas(experts_.size());
    for (std::size_t k = 0; k < experts_.size(); ++k) thetas[k] = experts_[k].theta;
    return thetas;
}

Emission AgaciMachine::emit(double prediction) {
    for (std::size_t k = 0; k < experts_.size(); ++k) {
        const PredictionInterval candidate = rule_->make(prediction, experts_[k].theta);
        lowers_[k] = candidate.lower;
        uppers_[k] = candidate.upper;
    }
    aggregated_lower_ = boa_lower_.combine(lowers_);
    aggregated_upper_ = boa_upper_.combine(uppers_);

    PredictionInterval interval;
    if (aggregated_lower_ > aggregated_upper_) {
        ++crossings_;
        const double mid = 0.5 * (aggregated_lower_ + aggregated_upper_);
        interval = {mid, mid};
    } else {
        interval = {aggregated_lower_, aggregated_upper_};
    }
    return {interval, kNaN};
}

void AgaciMachine::update(const StreamStep& step) {
    boa_lower_.update(lowers_, step.outcome);
    boa_upper_.update(uppers_, step.outcome);
    for (std::size_t k = 0; k < experts_.size(); ++k) {
        const bool covered =
            rule_->covers(step.prediction, step.outcome, experts_[k].theta);
        experts_[k] = aci_step(experts_[k], !covered, alpha_);
    }
}

double AgaciMachine::current_radius(double prediction, double outcome) const {
    return rule_->radius(prediction, outcome);
}

void AgaciMachine::record(double prediction, double outcome) {
    rule_->record(prediction, outcome);
}

// --- factory ---------------------------------------------------------------------------

std::unique_ptr<OnlineIntervalAlgorithm> make_algorithm(const RunConfig& config) {
    config.validate();
    const TargetLevel alpha(config.alpha);
    const double theta1 = config.resolved_theta1();
    auto rule = make_rule(config.constructor);

    const auto resolve_gamma = [&](const char* who) {
        if (config.gamma) return *config.gamma;
        if (config.max_radius) return config.max_radius->value / std::sqrt(3.0);
        throw std::invalid_argument(std::string(who) + ": gamma or D must be provided");
    };

    switch (config.method) {
        case Method::Aci: {
            if (!config.gamma) {
                throw std::invalid_argument("ACI: gamma must be provided");
            }
            return std::make_unique<AciMachine>(alpha, *config.gamma, theta1, std::move(rule));
        }
        case Method::SfOgd: {
            return std::make_unique<SfOgdMachine>(alpha, resolve_gamma("SF-OGD"), theta1,
                                                  std::move(rule));
        }
        case Method::Saocp: {
            if (!config.max_radius) {
                throw std::invalid_argument("SAOCP: the maximum radius D must be provided");
            }
            return std::make_unique<SaocpMachine>(alpha, resolve_gamma("SAOCP"),
                                                  *config.max_radius, theta1,
                                                  config.lifetime_multiplier, std::move(rule));
        }
        case Method::Faci: {
            std::optional<double> fixed_eta;
            if (config.constructor == ConstructorKind::Quantile) {
                const double eta_alpha =
                    config.faci_eta_miscoverage ? 1.0 - config.alpha : config.alpha;
                fixed_eta = faci_eta_default(config.resolved_gamma_grid().size(),
                                             config.interval_length, eta_alpha);
            }
            const double sigma = 1.0 / (2.0 * static_cast<double>(config.interval_length));
            return std::make_unique<FaciMachine>(alpha, config.resolved_gamma_grid(), theta1,
                                                 config.interval_length, sigma, fixed_eta,
                                                 std::move(rule));
        }
        case Method::AgAci: {
            return std::make_unique<AgaciMachine>(alpha, config.resolved_gamma_grid(), theta1,
                                                  std::move(rule));
        }
    }
    throw std::logic_error("make_algorithm: unhandled method");
}

} // namespace conformal

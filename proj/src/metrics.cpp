#include "conformal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "conformal/pinball.hpp"

namespace conformal {

namespace {

void check_range(std::span<const StreamStep> steps, EvalRange range,
                 std::int64_t min_length = 1) {
    const auto t_count = static_cast<std::int64_t>(steps.size());
    if (range.start < 1 || range.end > t_count || range.start > range.end) {
        throw std::invalid_argument("evaluation range outside the run");
    }
    if (range.length() < min_length) {
        throw std::invalid_argument("evaluation range too short");
    }
}

} // namespace

double empirical_coverage(std::span<const StreamStep> steps, EvalRange range) {
    check_range(steps, range);
    std::int64_t covered = 0;
    for (std::int64_t t = range.start; t <= range.end; ++t) {
        covered += steps[t - 1].err ? 0 : 1;
    }
    return static_cast<double>(covered) / static_cast<double>(range.length());
}

double coverage_error(std::span<const StreamStep> steps, EvalRange range, double alpha) {
    return empirical_coverage(steps, range) - alpha;
}

std::pair<double, std::int64_t> mean_width(std::span<const StreamStep> steps, EvalRange range) {
    check_range(steps, range);
    double total = 0.0;
    std::int64_t finite_count = 0;
    std::int64_t infinite_count = 0;
    for (std::int64_t t = range.start; t <= range.end; ++t) {
        const double w = steps[t - 1].interval.width();
        if (std::isfinite(w)) {
            total += w;
            ++finite_count;
        } else {
            ++infinite_count;
        }
    }
    if (finite_count == 0) {
        throw std::invalid_argument("mean_width: every width in the range is infinite");
    }
    return {total / static_cast<double>(finite_count), infinite_count};
}

double path_length(std::span<const StreamStep> steps, EvalRange range) {
    check_range(steps, range, 2);
    double total = 0.0;
    for (std::int64_t t = range.start + 1; t <= range.end; ++t) {
        const double prev = steps[t - 2].interval.width();
        const double curr = steps[t - 1].interval.width();
        if (std::isfinite(prev) && std::isfinite(curr)) {
            total += std::abs(curr - prev);
        }
    }
    return total;
}

BestFixedTheta best_fixed_theta(std::span<const double> radii, double alpha) {
    if (radii.empty()) {
        throw std::invalid_argument("best_fixed_theta: empty radii");
    }
    std::vector<double> sorted(radii.begin(), radii.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<std::int64_t>(sorted.size());

    std::vector<double> prefix(sorted.size() + 1, 0.0);
    for (std::int64_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];
    const double total = prefix[n];

    // Cumulative loss at theta = sorted[k]:
    //   (1 - alpha) * (k * theta - prefix_k) + alpha * ((total - prefix_k) - (n - k) * theta)
    // with k the number of radii <= theta; minimize over breakpoints.
    BestFixedTheta best;
    best.loss = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < n; ++i) {
        const double theta = sorted[i];
        const double k = static_cast<double>(i + 1);
        const double below = prefix[i + 1];
        const double loss = (1.0 - alpha) * (k * theta - below) +
                            alpha * ((total - below) - (static_cast<double>(n) - k) * theta);
        if (loss < best.loss) {
            best.loss = loss;
            best.theta = theta;
        }
    }
    return best;
}

double regret(std::span<const double> thetas, std::span<const double> radii, double alpha) {
    if (thetas.size() != radii.size()) {
        throw std::invalid_argument("regret: theta/radius length mismatch");
    }
    if (thetas.empty()) {
        throw std::invalid_argument("regret: empty input");
    }
    double incurred = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        incurred += pinball_loss(thetas[i], radii[i], alpha);
    }
    return incurred - best_fixed_theta(radii, alpha).loss;
}

double strongly_adaptive_regret(std::span<const double> thetas, std::span<const double> radii,
                                double alpha, std::int64_t m) {
    if (thetas.size() != radii.size()) {
        throw std::invalid_argument("strongly_adaptive_regret: length mismatch");
    }
    const auto t_count = static_cast<std::int64_t>(thetas.size());
    if (m < 1 || m > t_count) {
        throw std::invalid_argument("strongly_adaptive_regret: window length out of range");
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::int64_t start = 0; start + m <= t_count; ++start) {
        worst = std::max(worst, regret(thetas.subspan(start, m), radii.subspan(start, m), alpha));
    }
    return worst;
}

RunReport build_report(std::span<const StreamStep> steps, EvalRange range, double alpha,
                       std::span<const std::int64_t> sa_windows) {
    RunReport report;
    report.eval_start = range.start;
    report.eval_end = range.end;
    report.empirical_coverage = empirical_coverage(steps, range);
    report.coverage_error = report.empirical_coverage - alpha;

    try {
        const auto [mean, infinite_count] = mean_width(steps, range);
        report.mean_width = mean;
        report.infinite_width_count = infinite_count;
    } catch (const std::invalid_argument&) {
        report.mean_width = std::nullopt;
        report.infinite_width_count = range.length();
    }
    if (range.length() >= 2) {
        report.path_length = path_length(steps, range);
    }

    std::vector<double> thetas;
    std::vector<double> radii;
    bool theta_defined = true;
    for (std::int64_t t = range.start; t <= range.end; ++t) {
        const StreamStep& step = steps[t - 1];
        if (std::isnan(step.theta)) {
            theta_defined = false;
            break;
        }
        if (!std::isfinite(step.radius)) continue;
        thetas.push_back(step.theta);
        radii.push_back(step.radius);
    }
    if (theta_defined && !thetas.empty()) {
        report.regret = regret(thetas, radii, alpha);
        for (const std::int64_t m : sa_windows) {
            report.sa_regret[m] = strongly_adaptive_regret(thetas, radii, alpha, m);
        }
    }
    return report;
}

std::string report_to_json(const RunReport& report,
                           const std::map<std::string, std::string>& extra) {
    nlohmann::json doc;
    doc["empirical_coverage"] = report.empirical_coverage;
    doc["coverage_error"] = report.coverage_error;
    if (report.mean_width) {
        doc["mean_width"] = *report.mean_width;
    } else {
        doc["mean_width"] = nullptr;
    }
    doc["infinite_width_count"] = report.infinite_width_count;
    doc["path_length"] = report.path_length;
    if (report.regret) {
        doc["regret"] = *report.regret;
    } else {
        doc["regret"] = nullptr;
    }
    for (const auto& [m, value] : report.sa_regret) {
        doc["sa_regret." + std::to_string(m)] = value;
    }
    doc["eval_start"] = report.eval_start;
    doc["eval_end"] = report.eval_end;
    for (const auto& [key, value] : extra) {
        // Extra values arrive as rendered JSON fragments (number, string, null).
        doc[key] = nlohmann::json::parse(value);
    }
    return doc.dump(2) + "\n";
}

} // namespace conformal

#include "conformal/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <thread>
#include <tuple>

#include "conformal/algorithms.hpp"
#include "conformal/simgen.hpp"

namespace conformal::bench {

namespace {

constexpr std::uint64_t kShiftSalt = 0x73686966;
constexpr std::uint64_t kArmaSalt = 0x6672696d;

struct PreparedCell {
    std::vector<StepPair> pairs;
    RunConfig config;
    EvalRange eval;
    double estimated_D = 0.0;
};

PreparedCell prepare_shift_cell(const CellKey& key) {
    sim::ShiftSpec spec;
    spec.shift_delta = key.param;
    // Same base seed for both arms: the underlying normals match and only
    // the post-shift scale differs.
    const auto pairs = sim::gen_shift_stream(spec, sim::derive_seed(key.seed, kShiftSalt));

    PreparedCell cell;
    cell.pairs = pairs;
    cell.eval = {51, spec.length};
    cell.config.method = key.method;
    cell.config.alpha = key.alpha;
    cell.config.constructor = original_constructor(key.method);

    if (cell.config.constructor == ConstructorKind::Linear) {
        std::vector<double> residuals;
        residuals.reserve(pairs.size());
        for (const StepPair& p : pairs) residuals.push_back(p.outcome - p.prediction);
        cell.config.max_radius = sim::estimate_D(residuals, 1, 50);
    } else {
        cell.config.max_radius = MaxRadius(1.0);
    }
    cell.estimated_D = cell.config.max_radius->value;
    cell.config.gamma = cell.config.max_radius->value / std::sqrt(3.0);
    return cell;
}

PreparedCell prepare_arma_cell(const CellKey& key, Predictor predictor) {
    sim::FriedmanSpec friedman;
    sim::ArmaSpec noise;
    noise.psi = key.param;
    noise.xi = key.param;
    const auto rows =
        sim::gen_friedman(friedman, noise, sim::derive_seed(key.seed, kArmaSalt));

    std::vector<double> predictions(rows.size(), 0.0);
    if (predictor == Predictor::Oracle) {
        for (std::size_t i = 0; i < rows.size(); ++i) predictions[i] = rows[i].mean;
    } else {
        sim::RidgeRegressor model(sim::FriedmanSpec::feature_count);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            predictions[i] = model.predict(rows[i].features);
            model.observe(rows[i].features, rows[i].outcome);
        }
    }

    std::vector<double> residuals(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        residuals[i] = rows[i].outcome - predictions[i];
    }

    PreparedCell cell;
    // The methods run from t = 250 on; metrics start at global t = 300.
    constexpr std::int64_t kRunStart = 250;
    constexpr std::int64_t kEvalStart = 300;
    for (std::size_t i = kRunStart - 1; i < rows.size(); ++i) {
        cell.pairs.push_back({predictions[i], rows[i].outcome});
    }
    cell.eval = {kEvalStart - kRunStart + 1, static_cast<std::int64_t>(cell.pairs.size())};
    cell.config.method = key.method;
    cell.config.alpha = key.alpha;
    cell.config.constructor = original_constructor(key.method);
    cell.config.max_radius = sim::estimate_D(residuals, 200, 249);
    cell.estimated_D = cell.config.max_radius->value;
    cell.config.gamma = cell.config.max_radius->value / std::sqrt(3.0);
    return cell;
}

RunReport evaluate(const PreparedCell& cell) {
    auto algorithm = make_algorithm(cell.config);
    const auto steps = run_stream(*algorithm, cell.pairs);
    return build_report(steps, cell.eval, cell.config.alpha);
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto worker_count = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    pool.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                body(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

double quantile_type7(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

} // namespace

ConstructorKind original_constructor(Method method) {
    switch (method) {
        case Method::Aci:
        case Method::AgAci:
        case Method::Faci:
            return ConstructorKind::Quantile;
        case Method::SfOgd:
        case Method::Saocp:
            return ConstructorKind::Linear;
    }
    return ConstructorKind::Quantile;
}

std::vector<double> StudyConfig::resolved_params() const {
    if (!params.empty()) return params;
    if (study == Study::Arma) return {0.1, 0.8, 0.9, 0.95, 0.99};
    return {0.0, 0.5};
}

std::vector<CellResult> run_study(const StudyConfig& config) {
    if (config.num_seeds < 1) throw std::invalid_argument("run_study: need at least one seed");
    if (config.methods.empty()) throw std::invalid_argument("run_study: no methods selected");
    if (config.alphas.empty()) throw std::invalid_argument("run_study: no alphas selected");
    if (config.workers < 1) throw std::invalid_argument("run_study: worker count must be >= 1");

    std::vector<CellKey> keys;
    for (int seed = 1; seed <= config.num_seeds; ++seed) {
        for (const double param : config.resolved_params()) {
            for (const double alpha : config.alphas) {
                for (const Method method : config.methods) {
                    keys.push_back({static_cast<std::uint64_t>(seed), method, alpha, param});
                }
            }
        }
    }

    std::vector<CellResult> results(keys.size());
    parallel_for(keys.size(), config.workers, [&](std::size_t i) {
        const PreparedCell cell = config.study == Study::Shift
                                      ? prepare_shift_cell(keys[i])
                                      : prepare_arma_cell(keys[i], config.predictor);
        results[i] = {keys[i], evaluate(cell), cell.estimated_D};
    });
    return results;
}

std::vector<AggregateRow> aggregate(const std::vector<CellResult>& results) {
    struct Cell {
        std::vector<double> coverage_error;
        std::vector<double> mean_width;
        std::vector<double> path_length;
    };
    std::map<std::tuple<std::string, double, double>, Cell> cells;
    for (const CellResult& r : results) {
        auto& cell = cells[{to_string(r.key.method), r.key.alpha, r.key.param}];
        cell.coverage_error.push_back(r.report.coverage_error);
        if (r.report.mean_width) cell.mean_width.push_back(*r.report.mean_width);
        cell.path_length.push_back(r.report.path_length);
    }

    std::vector<AggregateRow> rows;
    for (const auto& [key, cell] : cells) {
        const auto& [method_name, alpha, param] = key;
        const Method method = *parse_method(method_name);
        const auto emit = [&](const std::string& metric, const std::vector<double>& values) {
            if (values.empty()) return;
            double total = 0.0;
            for (const double v : values) total += v;
            AggregateRow row;
            row.method = method;
            row.alpha = alpha;
            row.param = param;
            row.metric = metric;
            row.mean = total / static_cast<double>(values.size());
            row.q10 = quantile_type7(values, 0.10);
            row.q90 = quantile_type7(values, 0.90);
            rows.push_back(row);
        };
        emit("coverage_error", cell.coverage_error);
        emit("mean_width", cell.mean_width);
        emit("path_length", cell.path_length);
    }
    return rows;
}

int resolve_workers(int requested) {
    if (const char* env = std::getenv("CONFORMAL_WORKERS")) {
        const int parsed = std::atoi(env);
        if (parsed >= 1) return parsed;
    }
    if (requested >= 1) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace conformal::bench

#include "conformal/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include <nlohmann/json.hpp>

#include "conformal/algorithms.hpp"
#include "conformal/bench.hpp"
#include "conformal/csv_io.hpp"
#include "conformal/metrics.hpp"
#include "conformal/simgen.hpp"

namespace conformal::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sanitize_name(const std::string& name) {
    std::string out;
    for (const char c : name) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return out.empty() ? std::string("group") : out;
}

// Runs one prepared stream and writes the per-group artifacts.
void run_one_group(const RunOptions& options, const io::InputGroup& group,
                   const fs::path& out_dir) {
    const auto& records = group.records;
    if (records.empty()) throw io::DataError("group '" + group.name + "' has no rows");

    std::vector<StepPair> pairs;
    pairs.reserve(records.size());
    for (const io::InputRecord& rec : records) {
        double y = rec.y;
        double mu = rec.mu_hat;
        if (options.log_transform) {
            if (!(y > 0.0) || !(mu > 0.0)) {
                throw io::DataError("--log-transform requires positive y and mu_hat");
            }
            y = std::log(y);
            mu = std::log(mu);
        }
        pairs.push_back({mu, y});
    }
    const auto t_count = static_cast<std::int64_t>(pairs.size());

    RunConfig config;
    const auto method = parse_method(options.method);
    if (!method) throw UsageError("unknown method: " + options.method);
    config.method = *method;
    const auto constructor = parse_constructor(options.constructor);
    if (!constructor) throw UsageError("unknown constructor: " + options.constructor);
    config.constructor = *constructor;
    config.alpha = options.alpha;
    config.gamma = options.gamma;
    config.gamma_grid = options.gamma_grid;
    config.theta1 = options.theta1;
    config.lifetime_multiplier = options.lifetime_g;
    config.interval_length = options.interval_length;

    if (options.max_radius && options.calibrate_D) {
        throw UsageError("--D and --calibrate-D are mutually exclusive");
    }
    if (options.max_radius) {
        config.max_radius = MaxRadius(*options.max_radius);
    } else if (options.calibrate_D) {
        const auto window = *options.calibrate_D;
        if (window.start < 1 || window.end > t_count || window.start > window.end) {
            throw io::DataError("--calibrate-D window outside the data");
        }
        std::vector<double> residuals(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            residuals[i] = pairs[i].outcome - pairs[i].prediction;
        }
        config.max_radius = sim::estimate_D(residuals, window.start, window.end);
    }

    EvalRange eval{1, t_count};
    if (options.eval_range) {
        eval = {options.eval_range->start, options.eval_range->end};
        if (eval.start < 1 || eval.end > t_count || eval.start > eval.end) {
            throw io::DataError("--eval-range outside the data");
        }
    }

    auto algorithm = make_algorithm(config);
    const auto steps = run_stream(*algorithm, pairs);
    const auto report = build_report(steps, eval, config.alpha, options.sa_windows);

    fs::create_directories(out_dir);

    std::vector<io::OutputRecord> output;
    output.reserve(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const StreamStep& step = steps[i];
        io::OutputRecord rec;
        rec.t = records[i].t;
        rec.y = records[i].y;
        rec.mu_hat = records[i].mu_hat;
        rec.lower = options.log_transform ? std::exp(step.interval.lower) : step.interval.lower;
        rec.upper = options.log_transform ? std::exp(step.interval.upper) : step.interval.upper;
        rec.covered = step.err ? 0 : 1;
        rec.theta = step.theta;
        rec.width = rec.upper - rec.lower;
        output.push_back(rec);
    }
    io::write_intervals_csv(out_dir / "intervals.csv", output);

    std::map<std::string, std::string> extra;
    extra["method"] = "\"" + to_string(config.method) + "\"";
    extra["constructor"] = "\"" + to_string(config.constructor) + "\"";
    extra["alpha"] = io::format_double(config.alpha);
    extra["theta1"] = io::format_double(config.resolved_theta1());
    if (config.gamma) {
        extra["gamma"] = io::format_double(*config.gamma);
    } else if (config.max_radius &&
               (config.method == Method::SfOgd || config.method == Method::Saocp)) {
        // the default rate these methods resolve to
        extra["gamma"] = io::format_double(config.max_radius->value / std::sqrt(3.0));
    }
    if (config.max_radius) extra["D"] = io::format_double(config.max_radius->value);
    if (config.method == Method::Faci || config.method == Method::AgAci) {
        nlohmann::json grid = config.resolved_gamma_grid();
        extra["gamma_grid"] = grid.dump();
    }
    if (config.method == Method::Faci) {
        extra["interval_length"] = std::to_string(config.interval_length);
    }
    if (config.method == Method::Saocp) {
        extra["lifetime_multiplier"] = std::to_string(config.lifetime_multiplier);
    }
    extra["log_transform"] = options.log_transform ? "true" : "false";
    if (!group.name.empty()) extra["group"] = nlohmann::json(group.name).dump();

    std::ofstream metrics_out(out_dir / "metrics.json");
    if (!metrics_out) throw io::DataError("cannot write metrics.json");
    metrics_out << report_to_json(report, extra);
}

void write_runs_csv(const fs::path& path, const std::string& study,
                    const std::vector<bench::CellResult>& results) {
    std::ofstream out(path);
    if (!out) throw io::DataError("cannot write " + path.string());
    out << "study,seed,method,alpha,param,empirical_coverage,coverage_error,mean_width,"
           "infinite_width_count,path_length,regret,estimated_D,eval_start,eval_end\n";
    for (const bench::CellResult& r : results) {
        out << study << ',' << r.key.seed << ',' << to_string(r.key.method) << ','
            << io::format_double(r.key.alpha) << ',' << io::format_double(r.key.param) << ','
            << io::format_double(r.report.empirical_coverage) << ','
            << io::format_double(r.report.coverage_error) << ','
            << (r.report.mean_width ? io::format_double(*r.report.mean_width) : "") << ','
            << r.report.infinite_width_count << ','
            << io::format_double(r.report.path_length) << ','
            << (r.report.regret ? io::format_double(*r.report.regret) : "") << ','
            << io::format_double(r.estimated_D) << ',' << r.report.eval_start << ','
            << r.report.eval_end << '\n';
    }
}

void write_aggregate_csv(const fs::path& path, const std::string& study,
                         const std::vector<bench::AggregateRow>& rows) {
    std::ofstream out(path);
    if (!out) throw io::DataError("cannot write " + path.string());
    out << "study,method,alpha,param,metric,mean,q10,q90\n";
    for (const bench::AggregateRow& row : rows) {
        out << study << ',' << to_string(row.method) << ',' << io::format_double(row.alpha)
            << ',' << io::format_double(row.param) << ',' << row.metric << ','
            << io::format_double(row.mean) << ',' << io::format_double(row.q10) << ','
            << io::format_double(row.q90) << '\n';
    }
}

int guarded(std::ostream& diag, const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const UsageError& e) {
        diag << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const io::DataError& e) {
        diag << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        diag << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return kExitData;
    }
}

} // namespace

std::optional<IndexRange> parse_index_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size()) {
        return std::nullopt;
    }
    try {
        IndexRange range;
        range.start = io::parse_int(text.substr(0, colon), "range");
        range.end = io::parse_int(text.substr(colon + 1), "range");
        return range;
    } catch (const io::DataError&) {
        return std::nullopt;
    }
}

int cmd_run(const RunOptions& options, std::ostream& diag) {
    return guarded(diag, [&] {
        auto groups = options.flusight ? io::read_flusight_csv(options.input)
                                       : io::read_input_csv(options.input);
        if (options.flusight && groups.empty()) {
            diag << "warning: no rows left after FluSight filtering\n";
        }
        if (options.group) {
            std::erase_if(groups,
                          [&](const io::InputGroup& g) { return g.name != *options.group; });
            if (groups.empty()) {
                throw io::DataError("group not found in input: " + *options.group);
            }
        }
        if (groups.empty()) throw io::DataError("no data groups in input");

        const bool grouped = groups.size() > 1 || !groups.front().name.empty();
        for (const io::InputGroup& group : groups) {
            const fs::path dir = grouped && !group.name.empty()
                                     ? options.out_dir / sanitize_name(group.name)
                                     : options.out_dir;
            run_one_group(options, group, dir);
        }
    });
}

int cmd_bench(const BenchOptions& options, std::ostream& diag) {
    return guarded(diag, [&] {
        bench::StudyConfig config;
        if (options.study == "arma") {
            config.study = bench::Study::Arma;
        } else if (options.study == "shift") {
            config.study = bench::Study::Shift;
        } else {
            throw UsageError("unknown study: " + options.study);
        }
        if (!options.methods.empty()) {
            config.methods.clear();
            for (const std::string& name : options.methods) {
                const auto method = parse_method(name);
                if (!method) throw UsageError("unknown method: " + name);
                config.methods.push_back(*method);
            }
        }
        if (!options.alphas.empty()) config.alphas = options.alphas;
        config.num_seeds = options.seeds;
        config.params = options.params;
        if (options.predictor == "oracle") {
            config.predictor = bench::Predictor::Oracle;
        } else if (options.predictor == "ridge") {
            config.predictor = bench::Predictor::Ridge;
        } else {
            throw UsageError("unknown predictor: " + options.predictor);
        }
        if (options.workers < 0) {
            throw UsageError("worker count must be >= 1 (0 requests auto)");
        }
        config.workers = bench::resolve_workers(options.workers);

        const auto results = bench::run_study(config);
        const auto rows = bench::aggregate(results);

        fs::create_directories(options.out_dir);
        write_runs_csv(options.out_dir / "runs.csv", options.study, results);
        write_aggregate_csv(options.out_dir / "aggregate.csv", options.study, rows);
    });
}

int cmd_plotdata(const PlotdataOptions& options, std::ostream& diag) {
    return guarded(diag, [&] {
        const fs::path intervals = options.run_dir / "intervals.csv";
        if (!fs::exists(intervals)) {
            throw io::DataError("missing run directory or intervals.csv: " +
                                intervals.string());
        }
        const auto records = io::read_intervals_csv(intervals);
        std::ofstream out(options.run_dir / "plotdata.csv");
        if (!out) throw io::DataError("cannot write plotdata.csv");
        out << "t,series,value\n";
        for (const io::OutputRecord& r : records) {
            out << r.t << ",y," << io::format_double(r.y) << '\n';
            out << r.t << ",lower," << io::format_double(r.lower) << '\n';
            out << r.t << ",upper," << io::format_double(r.upper) << '\n';
            out << r.t << ",prediction," << io::format_double(r.mu_hat) << '\n';
            out << r.t << ",width," << io::format_double(r.width) << '\n';
        }
    });
}

int cmd_gen(const GenOptions& options, std::ostream& diag) {
    return guarded(diag, [&] {
        std::vector<StepPair> pairs;
        if (options.study == "shift") {
            sim::ShiftSpec spec;
            spec.shift_delta = options.param;
            pairs = sim::gen_shift_stream(spec, sim::derive_seed(options.seed, 0x73686966));
        } else if (options.study == "arma") {
            sim::FriedmanSpec friedman;
            sim::ArmaSpec noise;
            noise.psi = options.param;
            noise.xi = options.param;
            const auto rows =
                sim::gen_friedman(friedman, noise, sim::derive_seed(options.seed, 0x6672696d));
            sim::RidgeRegressor model(sim::FriedmanSpec::feature_count);
            for (const sim::FriedmanRow& row : rows) {
                double prediction = 0.0;
                if (options.predictor == "oracle") {
                    prediction = row.mean;
                } else if (options.predictor == "ridge") {
                    prediction = model.predict(row.features);
                    model.observe(row.features, row.outcome);
                } else {
                    throw UsageError("unknown predictor: " + options.predictor);
                }
                pairs.push_back({prediction, row.outcome});
            }
        } else {
            throw UsageError("unknown study: " + options.study);
        }

        if (options.out_file.has_parent_path()) {
            fs::create_directories(options.out_file.parent_path());
        }
        std::ofstream out(options.out_file);
        if (!out) throw io::DataError("cannot write " + options.out_file.string());
        out << "t,y,mu_hat\n";
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            out << (i + 1) << ',' << io::format_double(pairs[i].outcome) << ','
                << io::format_double(pairs[i].prediction) << '\n';
        }
    });
}

} // namespace conformal::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace conformal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct IndexRange {
    std::int64_t start = 0;
    std::int64_t end = 0;
};

/// Parses "start:end" (1-based inclusive).
std::optional<IndexRange> parse_index_range(const std::string& text);

struct RunOptions {
    std::filesystem::path input;
    bool flusight = false;
    std::string method = "ACI";
    double alpha = 0.9;
    std::string constructor = "quantile";
    std::optional<double> gamma;
    std::vector<double> gamma_grid;
    std::optional<double> max_radius;
    std::optional<IndexRange> calibrate_D; // rows used for D = max |y - mu_hat|
    std::optional<double> theta1;
    int lifetime_g = 8;
    int interval_length = 100;
    std::optional<IndexRange> eval_range; // defaults to the whole stream
    std::vector<std::int64_t> sa_windows;
    bool log_transform = false;
    std::optional<std::string> group; // restrict grouped input to one group
    std::filesystem::path out_dir;
};

/// Runs one method over a CSV stream (or each group of a grouped file) and
/// writes intervals.csv + metrics.json per group under out_dir.
int cmd_run(const RunOptions& options, std::ostream& diag);

struct BenchOptions {
    std::string study = "shift"; // arma | shift
    std::vector<std::string> methods;
    std::vector<double> alphas;
    int seeds = 50;
    std::vector<double> params;
    std::string predictor = "oracle"; // oracle | ridge (arma study)
    int workers = 0;                  // 0 = auto
    std::filesystem::path out_dir;
};

/// Runs a simulation study grid and writes runs.csv + aggregate.csv.
int cmd_bench(const BenchOptions& options, std::ostream& diag);

struct PlotdataOptions {
    std::filesystem::path run_dir; // directory containing intervals.csv
};

/// Reshapes intervals.csv into long-format plotdata.csv (t, series, value).
int cmd_plotdata(const PlotdataOptions& options, std::ostream& diag);

struct GenOptions {
    std::string study = "shift";
    std::uint64_t seed = 1;
    double param = 0.0;
    std::string predictor = "oracle";
    std::filesystem::path out_file;
};

/// Dumps one generated study stream in the plain input schema.
int cmd_gen(const GenOptions& options, std::ostream& diag);

} // namespace conformal::cli

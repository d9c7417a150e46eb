#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conformal/core.hpp"

namespace conformal::io {

/// Raised on malformed input files; the CLI maps it to the data-error exit code.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest decimal rendering that parses back to the same double; inf and
/// nan render as "inf"/"-inf"/"nan".
std::string format_double(double value);
double parse_double(const std::string& text, const std::string& context);
std::int64_t parse_int(const std::string& text, const std::string& context);

struct InputRecord {
    std::int64_t t = 0;
    double y = 0.0;
    double mu_hat = 0.0;
};

struct InputGroup {
    std::string name; // empty for ungrouped input
    std::vector<InputRecord> records;
};

/// Reads the plain schema `t,y,mu_hat[,group]`. Rows must be strictly
/// ordered by t within each group; groups keep file order of first
/// appearance.
std::vector<InputGroup> read_input_csv(const std::filesystem::path& path);

struct OutputRecord {
    std::int64_t t = 0;
    double y = 0.0;
    double mu_hat = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    int covered = 1;
    double theta = 0.0;
    double width = 0.0;
};

void write_intervals_csv(const std::filesystem::path& path,
                         const std::vector<OutputRecord>& records);
std::vector<OutputRecord> read_intervals_csv(const std::filesystem::path& path);

/// One row of the FluSight point-estimate file we consume.
struct FlusightRow {
    std::string model_name;
    std::int64_t year = 0;
    std::int64_t model_week = 0;
    std::string season;
    double value = 0.0;     // forecast
    double obs_value = 0.0; // realized wILI
};

/// Reads the FluSight schema, keeps national one-week-ahead rows, drops the
/// excluded and duplicate models, sorts by (Year, Model.Week), and groups by
/// model name. y = obs_value, mu_hat = Value.
std::vector<InputGroup> read_flusight_csv(const std::filesystem::path& path);

} // namespace conformal::io

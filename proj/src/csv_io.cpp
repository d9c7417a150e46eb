#include "conformal/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace conformal::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (const char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            fields.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(field);
    for (std::string& f : fields) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
        while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    }
    return fields;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    return in;
}

// Header name -> column index; throws naming the first missing column.
std::map<std::string, std::size_t> index_header(const std::vector<std::string>& header,
                                                const std::vector<std::string>& required,
                                                const std::filesystem::path& path) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
    for (const std::string& name : required) {
        if (!index.contains(name)) {
            throw DataError(path.string() + ": missing required column '" + name + "'");
        }
    }
    return index;
}

} // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end) {
        throw DataError("malformed number '" + text + "' in " + context);
    }
    return value;
}

std::int64_t parse_int(const std::string& text, const std::string& context) {
    std::int64_t value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end) {
        throw DataError("malformed integer '" + text + "' in " + context);
    }
    return value;
}

std::vector<InputGroup> read_input_csv(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    const auto cols = index_header(header, {"t", "y", "mu_hat"}, path);
    const bool has_group = cols.contains("group");

    std::vector<InputGroup> groups;
    std::map<std::string, std::size_t> group_index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < header.size()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": short row");
        }
        const std::string context = path.string() + ":" + std::to_string(line_no);
        InputRecord rec;
        rec.t = parse_int(fields[cols.at("t")], context);
        rec.y = parse_double(fields[cols.at("y")], context);
        rec.mu_hat = parse_double(fields[cols.at("mu_hat")], context);
        if (!std::isfinite(rec.y) || !std::isfinite(rec.mu_hat)) {
            throw DataError(context + ": non-finite y or mu_hat");
        }

        const std::string group_name = has_group ? fields[cols.at("group")] : "";
        auto [it, inserted] = group_index.try_emplace(group_name, groups.size());
        if (inserted) groups.push_back(InputGroup{group_name, {}});
        auto& records = groups[it->second].records;
        if (!records.empty() && rec.t <= records.back().t) {
            throw DataError(context + ": rows must be strictly ordered by t within a group");
        }
        records.push_back(rec);
    }
    if (groups.empty()) throw DataError(path.string() + ": no data rows");
    return groups;
}

void write_intervals_csv(const std::filesystem::path& path,
                         const std::vector<OutputRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "t,y,mu_hat,lower,upper,covered,theta,width\n";
    for (const OutputRecord& r : records) {
        out << r.t << ',' << format_double(r.y) << ',' << format_double(r.mu_hat) << ','
            << format_double(r.lower) << ',' << format_double(r.upper) << ',' << r.covered
            << ',' << format_double(r.theta) << ',' << format_double(r.width) << '\n';
    }
}

std::vector<OutputRecord> read_intervals_csv(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected = {"t",     "y",       "mu_hat", "lower",
                                               "upper", "covered", "theta",  "width"};
    const auto cols = index_header(header, expected, path);

    std::vector<OutputRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string context = path.string() + ":" + std::to_string(line_no);
        if (fields.size() < expected.size()) throw DataError(context + ": short row");
        OutputRecord r;
        r.t = parse_int(fields[cols.at("t")], context);
        r.y = parse_double(fields[cols.at("y")], context);
        r.mu_hat = parse_double(fields[cols.at("mu_hat")], context);
        r.lower = parse_double(fields[cols.at("lower")], context);
        r.upper = parse_double(fields[cols.at("upper")], context);
        r.covered = static_cast<int>(parse_int(fields[cols.at("covered")], context));
        r.theta = parse_double(fields[cols.at("theta")], context);
        r.width = parse_double(fields[cols.at("width")], context);
        records.push_back(r);
    }
    return records;
}

std::vector<InputGroup> read_flusight_csv(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    const std::vector<std::string> required = {"model_name", "Target", "Location", "Year",
                                               "Model.Week", "Season", "Value", "obs_value"};
    const auto cols = index_header(header, required, path);

    static const std::set<std::string> excluded = {
        "Delphi_Uniform", "CUBMA",        "CU_EAKFC_SIRS", "CU_EKF_SEIRS",
        "CU_EKF_SIRS",    "CU_RHF_SEIRS", "CU_RHF_SIRS"};

    std::vector<FlusightRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string context = path.string() + ":" + std::to_string(line_no);
        if (fields.size() < header.size()) throw DataError(context + ": short row");
        if (fields[cols.at("Target")] != "1 wk ahead") continue;
        if (fields[cols.at("Location")] != "US National") continue;
        const std::string& model = fields[cols.at("model_name")];
        if (excluded.contains(model)) continue;
        FlusightRow row;
        row.model_name = model;
        row.year = parse_int(fields[cols.at("Year")], context);
        row.model_week = parse_int(fields[cols.at("Model.Week")], context);
        row.season = fields[cols.at("Season")];
        row.value = parse_double(fields[cols.at("Value")], context);
        row.obs_value = parse_double(fields[cols.at("obs_value")], context);
        rows.push_back(std::move(row));
    }

    std::stable_sort(rows.begin(), rows.end(), [](const FlusightRow& a, const FlusightRow& b) {
        if (a.year != b.year) return a.year < b.year;
        return a.model_week < b.model_week;
    });

    std::vector<InputGroup> groups;
    std::map<std::string, std::size_t> group_index;
    for (const FlusightRow& row : rows) {
        auto [it, inserted] = group_index.try_emplace(row.model_name, groups.size());
        if (inserted) groups.push_back(InputGroup{row.model_name, {}});
        auto& records = groups[it->second].records;
        records.push_back(InputRecord{static_cast<std::int64_t>(records.size() + 1),
                                      row.obs_value, row.value});
    }
    std::sort(groups.begin(), groups.end(),
              [](const InputGroup& a, const InputGroup& b) { return a.name < b.name; });
    return groups;
}

} // namespace conformal::io

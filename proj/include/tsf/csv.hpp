#pragma once

#include "tsf/time_series.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsf {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

inline bool parse_finite(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_exact(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw std::runtime_error("failed to format number");
    return std::string(buf, ptr);
}

inline std::string format_17g(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

}  // namespace detail

/// Reads a comma-separated file with one header row.
///
/// When `has_time_column` is set the first column is an opaque timestamp and is
/// skipped. Every remaining cell must parse as a finite real; the error names
/// the offending data row (1-based) and column header.
inline TimeSeries load_csv(const std::filesystem::path& path, bool has_time_column) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open CSV file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw CsvError("CSV file '" + path.string() + "' is empty (missing header row)");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM

    const auto header = detail::split_fields(line);
    const std::size_t skip = has_time_column ? 1 : 0;
    if (header.size() <= skip) throw CsvError("CSV file '" + path.string() + "' has no data columns");
    std::vector<std::string> names;
    for (std::size_t i = skip; i < header.size(); ++i) names.emplace_back(header[i]);
    const std::size_t width = header.size();
    const std::size_t channels = width - skip;

    std::vector<double> flat;  // row-major, one row per timestep
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto fields = detail::split_fields(line);
        if (fields.size() != width) {
            throw CsvError("CSV file '" + path.string() + "': row " + std::to_string(row) + " has " +
                           std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
        }
        for (std::size_t i = skip; i < width; ++i) {
            double v = 0.0;
            if (!detail::parse_finite(fields[i], v)) {
                throw CsvError("CSV file '" + path.string() + "': row " + std::to_string(row) + ", column '" +
                               names[i - skip] + "': '" + std::string(fields[i]) + "' is not a finite number");
            }
            flat.push_back(v);
        }
    }
    if (row == 0) throw CsvError("CSV file '" + path.string() + "' has no data rows");

    Matrix values(static_cast<Index>(channels), static_cast<Index>(row));
    for (std::size_t t = 0; t < row; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            values(static_cast<Index>(c), static_cast<Index>(t)) = flat[t * channels + c];
        }
    }
    return make_series(path.stem().string(), std::move(values), std::move(names), 0.0);
}

/// Writes `t,<channel names...>` with t = step * dt, 17 significant digits
/// for t and shortest round-trip decimals for the values.
inline void write_csv(const TimeSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CSV file '" + path.string() + "'");
    std::string buffer = "t";
    for (const auto& n : series.channel_names) buffer += "," + n;
    buffer += '\n';
    for (Index t = 0; t < series.length(); ++t) {
        buffer += detail::format_17g(static_cast<double>(t) * series.dt);
        for (Index c = 0; c < series.channels(); ++c) {
            buffer += ',';
            buffer += detail::format_exact(series.values(c, t));
        }
        buffer += '\n';
        if (buffer.size() > (1u << 20)) {
            out << buffer;
            buffer.clear();
        }
    }
    out << buffer;
    if (!out) throw std::runtime_error("I/O failure while writing '" + path.string() + "'");
}

}  // namespace tsf

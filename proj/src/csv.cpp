#include "eitsim/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <string_view>

#include <fmt/core.h>

#include "eitsim/errors.hpp"

namespace eit {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s == "nan") {
        out = std::nan("");
        return true;
    }
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

}  // namespace

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return columns[i];
    throw ValidationError(fmt::format("CSV has no column '{}'", name));
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw ValidationError("CSV is empty (line 1: missing header)");
    ++lineno;
    for (auto field : split(line)) t.header.emplace_back(trim(field));
    t.columns.resize(t.header.size());
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split(line);
        if (fields.size() != t.header.size())
            throw ValidationError(fmt::format("CSV line {}: expected {} fields, found {}", lineno,
                                              t.header.size(), fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            double v;
            if (!parse_double(fields[i], v))
                throw ValidationError(fmt::format("CSV line {}: cannot parse '{}' as a number",
                                                  lineno, trim(fields[i])));
            t.columns[i].push_back(v);
        }
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return read_csv(in);
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace eit

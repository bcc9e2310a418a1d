#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace eit {

/// Numeric table read from a comma-separated file with one header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
    /// Column by header name; throws ValidationError if absent.
    const std::vector<double>& column(const std::string& name) const;
};

/// Throws ValidationError naming the 1-based line number of the first
/// malformed row.
CsvTable read_csv(std::istream& is);
CsvTable read_csv(const std::filesystem::path& path);

/// `%.12g`, with "nan"/"inf" spelled the same on every platform.
std::string format_number(double v);

}  // namespace eit

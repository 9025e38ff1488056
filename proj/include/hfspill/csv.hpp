#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hfspill::csv {

/// 12-significant-digit rendering used by every numeric output file.
std::string format_number(double value);

/// Shortest representation that parses back to the identical double.
std::string format_exact(double value);

/// Parses a finite double; `context` names the cell in error messages.
double parse_double(std::string_view text, std::string_view context);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string source;

    /// Column index by name; throws ValidationError naming the source when absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated table with a header row. Blank lines are skipped;
/// every row must have as many fields as the header.
Table read(std::istream& in, std::string source);
Table read_file(const std::filesystem::path& path);

std::string join(const std::vector<std::string>& fields, char sep = ',');
std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace hfspill::csv

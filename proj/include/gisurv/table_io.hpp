#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gisurv {

/// One non-comment, non-blank line of a line-oriented table.
struct TableRow {
    std::size_t line;  // 1-based
    std::vector<std::string> fields;
};

/// Parses a line-oriented table. Lines whose first non-blank character is
/// '#' and blank lines are skipped. Fields are split on `delim` and trimmed;
/// a '\0' delimiter yields the whole trimmed line as a single field.
std::vector<TableRow> parse_table(std::string_view content, char delim = '\t');

/// Reads a whole file. Throws ConfigError if it cannot be opened.
std::string read_file(const std::filesystem::path &path);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace gisurv

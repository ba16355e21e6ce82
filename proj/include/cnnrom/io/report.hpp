#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace cnnrom::io {

using Cell = std::variant<std::string, double, std::int64_t>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

/// Doubles at 17 significant digits, so the text parses back to the same bits.
std::string format_cell(const Cell& c);

/// CSV with a header line; fields containing a comma, quote or newline are
/// quoted with doubled quotes. Throws std::invalid_argument when a row width
/// differs from the header.
std::string to_csv(const Table& t);
void emit_report(const Table& t, const std::filesystem::path& path);

/// Inverse of to_csv at the text level.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace cnnrom::io

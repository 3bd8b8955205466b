#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qspr::data {

/// Header plus string cells. Rows may be shorter than the header only if the
/// source file was; readers check widths where it matters.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name, std::string_view source) const;
};

/// RFC 4180 quoting, LF or CRLF line ends, optional UTF-8 BOM. The first record is the header.
CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

std::string format_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// 17 significant digits; NaN formats as an empty cell.
std::string format_double(double v);

/// Empty (or NA/NaN) cells are missing. Throws ParseError with row/column location otherwise.
std::optional<double> parse_number(std::string_view cell, std::string_view source, std::size_t row,
                                   std::string_view column);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace qspr::data

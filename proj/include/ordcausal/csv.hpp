#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ordcausal {

// Parsed CSV with a required header row. Strict RFC-4180: comma separator,
// CRLF or LF record ends, double-quote escaping; '.' decimal, no locale
// handling. Every record must have exactly as many fields as the header.
struct CsvTable {
  std::string source;  // file name used in error messages
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line each record starts on

  bool has_column(const std::string& name) const;
  // Throws ConfigError naming the column when absent.
  std::size_t column(const std::string& name) const;
};

// Throws ConfigError with the source name and 1-based line number on malformed
// input (unterminated quote, stray quote, ragged record, duplicate or empty
// header name, empty file). A leading UTF-8 byte-order mark is skipped.
CsvTable parse_csv(std::string_view text, std::string source_name);
CsvTable read_csv(const std::string& path);

// Field parsers with line-precise errors ("source line 5, column 'age': ...").
double csv_double(const CsvTable& table, std::size_t row, std::size_t col);
int csv_int(const CsvTable& table, std::size_t row, std::size_t col);

// RFC-4180 output quoting: wraps the field in quotes and doubles embedded
// quotes when it contains a comma, quote, or line break.
std::string csv_quote(std::string_view field);

}  // namespace ordcausal

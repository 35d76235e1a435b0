#include "ordcausal/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ordcausal/errors.hpp"

namespace ordcausal {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ConfigError(source + " line " + std::to_string(line) + ": " + what);
}

}  // namespace

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw ConfigError(source + ": missing column '" + name + "'");
}

CsvTable parse_csv(std::string_view text, std::string source_name) {
  CsvTable table;
  table.source = std::move(source_name);

  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::size_t line = 1;
  std::size_t record_line = 1;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool any_record = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (!table.header.empty() && record.size() != table.header.size()) {
      fail(table.source, record_line,
           "expected " + std::to_string(table.header.size()) + " fields, found " +
               std::to_string(record.size()));
    }
    if (table.header.empty()) {
      std::unordered_set<std::string> seen;
      for (const auto& name : record) {
        if (name.empty()) fail(table.source, record_line, "empty header name");
        if (!seen.insert(name).second)
          fail(table.source, record_line, "duplicate column '" + name + "'");
      }
      table.header = std::move(record);
    } else {
      table.rows.push_back(std::move(record));
      table.row_lines.push_back(record_line);
    }
    record.clear();
    any_record = true;
    record_line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          fail(table.source, line, "stray quote inside field");
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 >= text.size() || text[i + 1] != '\n')
          fail(table.source, line, "bare carriage return");
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        if (field_was_quoted) fail(table.source, line, "text after closing quote");
        field.push_back(c);
    }
  }
  if (in_quotes) fail(table.source, record_line, "unterminated quoted field");
  // final record without trailing newline
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();

  if (!any_record) throw ConfigError(table.source + ": empty file (missing header row)");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw ConfigError(path + ": read failed");
  return parse_csv(buf.str(), path);
}

namespace {

[[noreturn]] void bad_field(const CsvTable& t, std::size_t row, std::size_t col,
                            const char* kind) {
  fail(t.source, t.row_lines[row],
       "column '" + t.header[col] + "': not " + kind + ": '" + t.rows[row][col] + "'");
}

}  // namespace

double csv_double(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows[row][col];
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size() || s.empty() || errno == ERANGE || !std::isfinite(v))
    bad_field(table, row, col, "a finite number");
  return v;
}

int csv_int(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows[row][col];
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_field(table, row, col, "an integer");
  return v;
}

std::string csv_quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace ordcausal

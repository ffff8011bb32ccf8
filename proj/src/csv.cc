#include "relcomp/csv.h"

#include <charconv>
#include <sstream>

#include "relcomp/error.h"

namespace relcomp::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

Row split(std::string_view line) {
  Row fields;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string where(int line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

Table parse(std::string_view text) {
  // Tolerate a UTF-8 byte order mark.
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  Table table;
  int line_no = 0;
  bool have_header = false;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (trim(line).empty()) continue;
    Row row = split(line);
    if (!have_header) {
      table.header = std::move(row);
      have_header = true;
      continue;
    }
    if (row.size() != table.header.size()) {
      throw Error(ErrorKind::kParse,
                  where(line_no) + "malformed row: expected " +
                      std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
    table.lines.push_back(line_no);
  }
  if (!have_header) throw Error(ErrorKind::kParse, "empty document");
  return table;
}

void expect_header(const Table& table, const std::vector<std::string>& expected) {
  if (table.header != expected) {
    throw Error(ErrorKind::kParse, "unexpected header '" + join(table.header) +
                                       "', want '" + join(expected) + "'");
  }
}

long long to_int(std::string_view field, int line) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorKind::kParse,
                where(line) + "malformed row: '" + std::string(field) + "' is not an integer");
  }
  return value;
}

double to_double(std::string_view field, int line) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorKind::kParse,
                where(line) + "malformed row: '" + std::string(field) + "' is not a number");
  }
  return value;
}

std::string join(const Row& row) {
  std::string out;
  for (size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += row[i];
  }
  return out;
}

}  // namespace relcomp::csv

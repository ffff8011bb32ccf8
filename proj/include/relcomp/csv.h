#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal CSV handling for the project's own schemas. Fields never contain
// commas or quotes, so no quoting is supported.
namespace relcomp::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  // 1-based line numbers of each row in the source document.
  std::vector<int> lines;
};

// Splits text into header + rows. Blank lines are skipped, CR is stripped
// and fields are trimmed. Throws Error(kParse) on an empty document or when
// a row's field count differs from the header.
Table parse(std::string_view text);

// Throws Error(kParse) unless the header equals `expected`.
void expect_header(const Table& table, const std::vector<std::string>& expected);

long long to_int(std::string_view field, int line);
double to_double(std::string_view field, int line);

std::string join(const Row& row);

}  // namespace relcomp::csv

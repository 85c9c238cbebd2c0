#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace panelkit::csv {

// One parsed CSV file: a header plus rectangular data rows.
// `record` of a data row is its 1-based record index counting the header,
// so the first data row is record 2; error messages use these numbers.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> records;
  std::string source;
};

Table read(std::istream& in, const std::string& source_name);
Table read_file(const std::filesystem::path& path);

// Minimal quoting: a field is quoted only when it contains a comma, quote,
// or line break. Output uses LF line endings.
std::string escape(const std::string& field);
void write(std::ostream& out, const Table& table);
std::string to_string(const Table& table);

}  // namespace panelkit::csv

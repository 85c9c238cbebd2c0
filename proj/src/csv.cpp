#include "panelkit/csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "panelkit/errors.hpp"

namespace panelkit::csv {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t record,
                       const std::string& msg) {
  throw ValidationError(source + ": record " + std::to_string(record) + ": " +
                        msg);
}

}  // namespace

Table read(std::istream& in, const std::string& source_name) {
  Table table;
  table.source = source_name;

  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;   // current field started with a quote
  bool field_open = false;   // current record has at least one char or comma
  std::size_t record = 1;

  auto end_field = [&]() {
    fields.push_back(field);
    field.clear();
    was_quoted = false;
  };

  auto end_record = [&]() {
    end_field();
    if (table.header.empty()) {
      table.header = fields;
    } else {
      if (fields.size() != table.header.size())
        fail(source_name, record,
             "expected " + std::to_string(table.header.size()) +
                 " fields, got " + std::to_string(fields.size()));
      table.rows.push_back(fields);
      table.records.push_back(record);
    }
    fields.clear();
    field_open = false;
    ++record;
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || was_quoted)
          fail(source_name, record, "stray quote inside unquoted field");
        in_quotes = true;
        was_quoted = true;
        field_open = true;
        break;
      case ',':
        end_field();
        field_open = true;
        break;
      case '\r':
        if (in.peek() == '\n') in.get(c);
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        if (was_quoted)
          fail(source_name, record, "content after closing quote");
        field += c;
        field_open = true;
        break;
    }
  }
  if (in_quotes) fail(source_name, record, "unterminated quoted field");
  if (field_open || !field.empty() || !fields.empty()) end_record();

  if (table.header.empty())
    throw ValidationError(source_name + ": empty file, header required");
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read(in, path.string());
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write(std::ostream& out, const Table& table) {
  auto put_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << escape(row[i]);
    }
    out << '\n';
  };
  put_row(table.header);
  for (const auto& row : table.rows) put_row(row);
}

std::string to_string(const Table& table) {
  std::ostringstream out;
  write(out, table);
  return out.str();
}

}  // namespace panelkit::csv

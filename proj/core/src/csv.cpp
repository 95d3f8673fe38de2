#include "lsld/csv.hpp"

#include <cstdio>
#include <fstream>

#include "lsld/error.hpp"

namespace lsld::csv {

Row split(std::string_view line) {
  Row row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV field");
  row.push_back(std::move(field));
  return row;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string join(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(row[i]);
  }
  return out;
}

std::vector<Row> read(const std::filesystem::path& path,
                      const Row& expected_header) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open CSV file " + path.string());
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Row row;
    try {
      row = split(line);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    if (!have_header) {
      if (row != expected_header)
        throw FormatError(path.string() + ": expected header '" +
                          join(expected_header) + "' but found '" + line + "'");
      have_header = true;
      continue;
    }
    if (row.size() != expected_header.size())
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(expected_header.size()) +
                        " fields, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw FormatError(path.string() + ": missing CSV header");
  return rows;
}

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

}  // namespace lsld::csv

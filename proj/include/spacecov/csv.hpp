#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spacecov::csv {

struct Record {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

struct Document {
  std::vector<std::string> comments;  // leading '#' lines, '#' stripped
  Record header;
  std::vector<Record> records;
};

// RFC 4180 reader with two extensions used throughout this project:
// input must be valid UTF-8, and lines starting with '#' before the header
// are treated as comments (they carry input digests on files we emit).
Document read(std::istream& in);
Document read_string(const std::string& text);

std::string format_field(const std::string& field);
std::string format_row(const std::vector<std::string>& fields);

// Doubles print with 17 significant digits so a parse round-trips exactly.
std::string format_double(double v);
double parse_double(const std::string& text, std::size_t line);

}  // namespace spacecov::csv

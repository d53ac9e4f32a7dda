#include "spacecov/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>

#include "spacecov/error.hpp"
#include "spacecov/unicode.hpp"

namespace spacecov::csv {

namespace {

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  Document parse() {
    Document doc;
    skip_comments(doc);
    bool first = true;
    while (pos_ < text_.size()) {
      Record rec = parse_record();
      if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
      if (first) {
        doc.header = std::move(rec);
        first = false;
      } else {
        doc.records.push_back(std::move(rec));
      }
    }
    if (first) fail("CSV: no header row found");
    return doc;
  }

private:
  void skip_comments(Document& doc) {
    while (pos_ < text_.size() && text_[pos_] == '#') {
      std::size_t eol = text_.find('\n', pos_);
      std::string body = text_.substr(pos_ + 1, eol == std::string::npos
                                                    ? std::string::npos
                                                    : eol - pos_ - 1);
      if (!body.empty() && body.back() == '\r') body.pop_back();
      if (!body.empty() && body.front() == ' ') body.erase(0, 1);
      doc.comments.push_back(body);
      if (eol == std::string::npos) {
        pos_ = text_.size();
      } else {
        pos_ = eol + 1;
        ++line_;
      }
    }
  }

  Record parse_record() {
    Record rec;
    rec.line = line_;
    std::string field;
    bool quoted = false;
    bool in_quotes = false;
    while (true) {
      if (pos_ >= text_.size()) {
        if (in_quotes) fail("CSV line ", rec.line, ": unterminated quoted field");
        rec.fields.push_back(std::move(field));
        return rec;
      }
      char c = text_[pos_];
      if (in_quotes) {
        if (c == '"') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
            field.push_back('"');
            pos_ += 2;
          } else {
            in_quotes = false;
            ++pos_;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
          ++pos_;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty() || quoted)
            fail("CSV line ", line_, ": stray quote inside unquoted field");
          quoted = true;
          in_quotes = true;
          ++pos_;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          quoted = false;
          ++pos_;
          break;
        case '\r':
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') {
            rec.fields.push_back(std::move(field));
            pos_ += 2;
            ++line_;
            return rec;
          }
          field.push_back(c);
          ++pos_;
          break;
        case '\n':
          rec.fields.push_back(std::move(field));
          ++pos_;
          ++line_;
          return rec;
        default:
          field.push_back(c);
          ++pos_;
          break;
      }
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

Document read_string(const std::string& text) {
  std::size_t bad = 0;
  if (!uni::valid_utf8(text, &bad))
    fail("CSV: invalid UTF-8 at byte offset ", bad);
  return Parser(text).parse();
}

Document read(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_string(buf.str());
}

std::string format_field(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += format_field(fields[i]);
  }
  out.push_back('\n');
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, std::size_t line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    fail("CSV line ", line, ": not a number: '", text, "'");
  return v;
}

}  // namespace spacecov::csv

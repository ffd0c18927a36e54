#include "csv.hpp"

#include "dsbayes/error.hpp"

namespace dsbayes::detail {

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  while (true) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!seen_row_ && !line.empty() && line.front() == '#') {
      preamble_.push_back(line.substr(1));
      continue;
    }
    if (line.empty()) continue;
    break;
  }
  seen_row_ = true;
  row_line_ = line_;

  std::string field;
  bool quoted = false;
  std::size_t pos = 0;
  while (true) {
    if (pos >= line.size()) {
      if (!quoted) break;
      // Quoted field continues on the next physical line.
      std::string more;
      if (!std::getline(in_, more)) {
        throw ParseError("unterminated quoted field", line, row_line_);
      }
      ++line_;
      if (!more.empty() && more.back() == '\r') more.pop_back();
      field += '\n';
      line = std::move(more);
      pos = 0;
      continue;
    }
    const char c = line[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < line.size() && line[pos] == '"') {
          field += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos &&
      (field.empty() || field.front() != '#')) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace dsbayes::detail

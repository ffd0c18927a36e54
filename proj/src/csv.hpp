#pragma once

#include <istream>
#include <string>
#include <vector>

namespace dsbayes::detail {

// RFC 4180 reader: comma separated, double-quoted fields may hold commas,
// quotes ("") and newlines. Tracks the physical line where each row starts.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next row into `fields`; false at end of input.
  bool next(std::vector<std::string>& fields);
  std::size_t row_line() const noexcept { return row_line_; }
  // Lines starting with '#' before the first data row, without the '#'.
  const std::vector<std::string>& preamble() const noexcept { return preamble_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t row_line_ = 0;
  bool seen_row_ = false;
  std::vector<std::string> preamble_;
};

std::string csv_escape(const std::string& field);

}  // namespace dsbayes::detail

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace commute::csv {

// Splits one line on commas. No quoting: ids in these formats never contain
// commas. A trailing '\r' is dropped.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view text);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// Fixed-point with the given number of decimals; "-0.000" is normalized.
std::string fixed(double value, int decimals);

// Reads lines, skipping blank ones. Tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line);
  std::size_t line_number() const { return line_number_; }

 private:
  std::istream& in_;
  std::size_t line_number_ = 0;
};

// Checks the header row matches `expected` exactly (after trimming).
bool header_matches(std::string_view line, std::string_view expected);

}  // namespace commute::csv

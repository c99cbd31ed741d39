#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace avcap::io {

/// 9 significant digits, "C" locale regardless of the global one.
std::string fmt(double x);

/// Shortest representation that parses back to the same double.
std::string fmt_exact(double x);

/// x rounded to 9 significant digits (so JSON dumps match the CSV text).
double round9(double x);

/// Locale-independent strict parse; throws std::invalid_argument on junk.
double parse_double(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header);
  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::string_view s);
  void end_row();

 private:
  std::ostream& os_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

/// Recursively replaces every floating-point leaf with round9 of itself.
void round_json(nlohmann::json& j);

/// Writes j (rounded) with two-space indent and a trailing newline.
void write_json(std::ostream& os, nlohmann::json j);

}  // namespace avcap::io

#include "avcap/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace avcap::io {

namespace {

std::string nonfinite(double x) {
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

std::string fmt(double x) {
  if (!std::isfinite(x)) return nonfinite(x);
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

std::string fmt_exact(double x) {
  if (!std::isfinite(x)) return nonfinite(x);
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double round9(double x) {
  if (!std::isfinite(x)) return x;
  return parse_double(fmt(x));
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) throw std::invalid_argument("empty number");
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header)
    : os_(os), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
  os_ << '\n';
}

CsvWriter& CsvWriter::cell(double x) { return cell(std::string_view(fmt(x))); }

CsvWriter& CsvWriter::cell(long long x) { return cell(std::string_view(std::to_string(x))); }

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (filled_ == columns_) throw std::logic_error("CsvWriter: too many cells in row");
  if (filled_) os_ << ',';
  os_ << s;
  ++filled_;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error("CsvWriter: row has missing cells");
  os_ << '\n';
  filled_ = 0;
}

void round_json(nlohmann::json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v)) {
      j = round9(v);
    } else {
      j = nullptr;
    }
  } else if (j.is_structured()) {
    for (auto& child : j) round_json(child);
  }
}

void write_json(std::ostream& os, nlohmann::json j) {
  round_json(j);
  os << j.dump(2) << '\n';
}

}  // namespace avcap::io

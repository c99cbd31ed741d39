#include "avcap/units.hpp"

#include <stdexcept>
#include <string>

#include "avcap/io.hpp"

namespace avcap::units {

namespace {

bool strip_suffix(std::string_view& s, std::string_view suffix) {
  if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
    s.remove_suffix(suffix.size());
    return true;
  }
  return false;
}

double number(std::string_view s, std::string_view original) {
  try {
    return io::parse_double(s);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("cannot parse '" + std::string(original) + "'");
  }
}

}  // namespace

double parse_speed(std::string_view s) {
  const std::string_view orig = s;
  if (strip_suffix(s, "kmh")) return number(s, orig) / 3.6;
  strip_suffix(s, "ms");
  return number(s, orig);
}

double parse_flow(std::string_view s) {
  const std::string_view orig = s;
  if (strip_suffix(s, "vph")) return number(s, orig) / 3600.0;
  return number(s, orig);
}

analytics::TctModel parse_tct(std::string_view s) {
  if (s == "linear") return analytics::TctModel::linear();
  constexpr std::string_view prefix = "fixed:";
  if (s.substr(0, prefix.size()) == prefix) {
    const double secs = number(s.substr(prefix.size()), s);
    if (!(secs > 0.0)) throw std::invalid_argument("fixed clearance time must be positive");
    return analytics::TctModel::fixed(secs);
  }
  throw std::invalid_argument("expected 'linear' or 'fixed:SECONDS', got '" + std::string(s) + "'");
}

}  // namespace avcap::units

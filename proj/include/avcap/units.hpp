#pragma once

#include <string_view>

#include "avcap/analytics.hpp"

namespace avcap::units {

/// "50kmh" -> m/s, "13.9ms" -> m/s, bare numbers are m/s. Throws std::invalid_argument.
double parse_speed(std::string_view s);

/// "1500vph" -> veh/s, bare numbers are veh/s.
double parse_flow(std::string_view s);

/// "linear" or "fixed:SECONDS".
analytics::TctModel parse_tct(std::string_view s);

}  // namespace avcap::units

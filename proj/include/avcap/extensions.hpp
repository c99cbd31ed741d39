#pragma once

#include <stdexcept>
#include <vector>

#include "avcap/analytics.hpp"

namespace avcap::ext {

using analytics::Policy;
using analytics::RoadConfig;

class UnsupportedConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kWarnCollisionsPerHour = 1.0;
inline constexpr double kRefuseCollisionsPerHour = 50.0;

/// N = (H / tau) (L / (eta v)): pair-steps in the horizon.
double pair_steps(const Policy& pol, const RoadConfig& road);
/// N p.
double expected_collisions(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

/// (1/(H L^2)) * integral_0^L (x^2/(2v) + (L-x)^2/(2c)) dx = L (v + c) / (6 v c H).
double position_weight(double L, double v, double c, double H);

struct OneHour {
  double value = 0.0;
  bool floored = false;
};

/// (1 - (T L/(tau eta v)) p) s+, floored at 0.
OneHour cic_one_hour(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

struct OverlapTerms {
  double no_collision = 0.0;   // p_c0 s_c0, second order
  double one_collision = 0.0;  // p_c1 s_c1, second order
  double two_overlap = 0.0;    // p_co2 s_co2
  double expanded = 0.0;       // sum of the three
  double factored = 0.0;       // combined closed form
  double c = 0.0;              // wave speed magnitude used
};

OverlapTerms overlap_terms(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

struct LaneChangeGain {
  double approx = 0.0;  // (1/2)(T/tau)^2 (L/(eta v))^2 p^2 s+
  double exact = 0.0;   // (N p (1-p)^(N-1))^2 (L - 2D)/L T^2/(2 H^2) s+
  double p_l2 = 0.0;
  double p_l2_exact = 0.0;
  double delta_s = 0.0;
};

/// Requires n_lanes == 2 and 2D <= 0.1 L.
LaneChangeGain lane_change_gain(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

struct ThroughputReport {
  double s_plus = 0.0;
  double s_baseline = 0.0;
  double s_overlap = 0.0;
  double s_two_lane = 0.0;
  double s_two_lane_exact = 0.0;
  OverlapTerms overlap;
  LaneChangeGain gain;
  double expected_collisions = 0.0;
  bool baseline_floored = false;
  bool overlap_floored = false;
  bool two_lane_floored = false;
  bool out_of_regime = false;  // expected collisions per hour above the warn level
};

/// All three throughputs. The two-lane value treats the road as two lanes
/// regardless of road.n_lanes.
ThroughputReport throughput_report(const Policy& pol, const RoadConfig& road, double l,
                                   double sigma_o);

/// s_c plus the lane-change gain; road.n_lanes must be 2.
double throughput_two_lane(const Policy& pol, const RoadConfig& road, double l, double sigma_o);
double cic_overlap(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

struct ComparisonRow {
  double eta = 0.0;
  ThroughputReport report;
};

std::vector<ComparisonRow> comparison_curve(double v, const std::vector<double>& eta_grid,
                                            const RoadConfig& road, double l, double sigma_o);

}  // namespace avcap::ext

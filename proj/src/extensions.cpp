#include "avcap/extensions.hpp"

#include <algorithm>
#include <cmath>

namespace avcap::ext {

namespace {

void check_two_lane(const RoadConfig& road) {
  if (road.n_lanes != 2) throw UnsupportedConfig("two-lane throughput needs n_lanes = 2");
  if (2.0 * road.D > 0.1 * road.L) {
    throw UnsupportedConfig("lane-change gap D too large: need 2D <= 0.1 L");
  }
}

}  // namespace

double pair_steps(const Policy& pol, const RoadConfig& road) {
  return (road.H / road.tau) * analytics::vehicle_count(pol, road);
}

double expected_collisions(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  return pair_steps(pol, road) * analytics::collision_probability(pol, l, sigma_o);
}

double position_weight(double L, double v, double c, double H) {
  return L * (v + c) / (6.0 * v * c * H);
}

OneHour cic_one_hour(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  const double T = analytics::clearance_time(road, pol.v);
  const double p = analytics::collision_probability(pol, l, sigma_o);
  const double raw = (1.0 - (T / road.tau) * analytics::vehicle_count(pol, road) * p) / pol.eta;
  return raw < 0.0 ? OneHour{0.0, true} : OneHour{raw, false};
}

OverlapTerms overlap_terms(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  road.validate();
  const double T = analytics::clearance_time(road, pol.v);
  const double H = road.H;
  const double p = analytics::collision_probability(pol, l, sigma_o);
  const double N = pair_steps(pol, road);
  const double sp = analytics::full_capacity(pol.eta);
  OverlapTerms t;
  t.c = std::abs(analytics::jam_wave_speed(pol, l));
  const double w = position_weight(road.L, pol.v, t.c, H);
  const double keep = 1.0 - T / H;
  const double pairs = N * (N - 1.0);
  t.no_collision = (1.0 - N * p + 0.5 * pairs * p * p) * sp;
  t.one_collision = (1.0 - (N - 1.0) * p) * N * p * keep * sp;
  t.two_overlap = 0.5 * pairs * p * p * w * keep * sp;
  t.expanded = t.no_collision + t.one_collision + t.two_overlap;
  const double first = (T / road.tau) * analytics::vehicle_count(pol, road) * p;
  const double second = (T / H - 0.5 + 0.5 * w * keep) * pairs * p * p;
  t.factored = (1.0 - first + second) * sp;
  return t;
}

double cic_overlap(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  const double v = overlap_terms(pol, road, l, sigma_o).factored;
  return v < 0.0 ? 0.0 : v;
}

LaneChangeGain lane_change_gain(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  check_two_lane(road);
  const double T = analytics::clearance_time(road, pol.v);
  const double H = road.H;
  const double p = analytics::collision_probability(pol, l, sigma_o);
  const double N = pair_steps(pol, road);
  const double sp = analytics::full_capacity(pol.eta);
  LaneChangeGain g;
  g.p_l2 = (N * p) * (N * p);
  // (1-p)^(N-1) via log1p; N is of order 1e8.
  const double one = N * p * std::exp((N - 1.0) * std::log1p(-p));
  g.p_l2_exact = one * one;
  g.delta_s = T * T / (2.0 * H * H) * sp;
  g.approx = g.p_l2 * g.delta_s;
  g.exact = g.p_l2_exact * (road.L - 2.0 * road.D) / road.L * g.delta_s;
  return g;
}

double throughput_two_lane(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  check_two_lane(road);
  const double v = overlap_terms(pol, road, l, sigma_o).factored +
                   lane_change_gain(pol, road, l, sigma_o).approx;
  return v < 0.0 ? 0.0 : v;
}

ThroughputReport throughput_report(const Policy& pol, const RoadConfig& road, double l,
                                   double sigma_o) {
  ThroughputReport r;
  r.s_plus = analytics::full_capacity(pol.eta);
  const OneHour base = cic_one_hour(pol, road, l, sigma_o);
  r.s_baseline = base.value;
  r.baseline_floored = base.floored;
  r.overlap = overlap_terms(pol, road, l, sigma_o);
  r.overlap_floored = r.overlap.factored < 0.0;
  r.s_overlap = r.overlap_floored ? 0.0 : r.overlap.factored;
  RoadConfig two = road;
  two.n_lanes = 2;
  r.gain = lane_change_gain(pol, two, l, sigma_o);
  const double two_lane = r.overlap.factored + r.gain.approx;
  r.two_lane_floored = two_lane < 0.0;
  r.s_two_lane = r.two_lane_floored ? 0.0 : two_lane;
  r.s_two_lane_exact = std::max(0.0, r.overlap.factored + r.gain.exact);
  r.expected_collisions = expected_collisions(pol, road, l, sigma_o);
  r.out_of_regime = r.expected_collisions > kWarnCollisionsPerHour * road.H / 3600.0 ||
                    pol.v * pol.eta <= l;
  return r;
}

std::vector<ComparisonRow> comparison_curve(double v, const std::vector<double>& eta_grid,
                                            const RoadConfig& road, double l, double sigma_o) {
  std::vector<ComparisonRow> out;
  out.reserve(eta_grid.size());
  for (double eta : eta_grid) out.push_back({eta, throughput_report({v, eta}, road, l, sigma_o)});
  return out;
}

}  // namespace avcap::ext

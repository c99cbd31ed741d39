#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "avcap/analytics.hpp"

namespace avcap::st {

using analytics::Policy;
using analytics::RoadConfig;

/// Expected collisions per hour above the refusal threshold.
class OutOfRegime : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForcedCollision {
  double t = 0.0;  // rounded down to the step grid
  double x = 0.0;  // the moving vehicle nearest to x in [0, L] is stopped
  int lane = 0;
};

struct CollisionEvent {
  double t = 0.0;
  double x = 0.0;
  int lane = 0;
  bool forced = false;
};

struct SpaceTimeConfig {
  Policy policy;
  RoadConfig road;  // L, tau (step), H, D, tct
  double l = 5.0;
  double sigma_o = 0.05;
  int n_lanes = 1;
  bool lane_change = false;
  bool random_collisions = true;  // per pair per step Bernoulli(p)
  double t_start = 0.0;           // simulation starts here in free flow; counting uses [0, H)
  double t_end = -std::numeric_limits<double>::infinity();  // <= t_start means H
  std::vector<ForcedCollision> forced;
  std::vector<double> probes;     // positions; crossing times recorded per lane
  std::uint64_t seed = 0;
  bool random_phase = true;       // random initial offset per lane
};

struct ProbeRecord {
  double x = 0.0;
  int lane = 0;
  std::vector<double> crossings;
};

struct SpaceTimeResult {
  std::vector<long long> exits;  // per lane, crossings of x = 0 inside [0, H)
  long long total_exits = 0;
  std::vector<CollisionEvent> events;
  std::vector<ProbeRecord> probes;
  long long merges = 0;
  double p = 0.0;
};

/// Margin before t = 0 after which no earlier collision can touch [0, H).
double stationary_window(const Policy& pol, const RoadConfig& road, double l);

SpaceTimeResult simulate(const SpaceTimeConfig& cfg);

/// Largest gap between consecutive crossings minus eta.
double abnormal_duration(const ProbeRecord& probe, double eta);

}  // namespace avcap::st

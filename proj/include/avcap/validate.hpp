#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "avcap/analytics.hpp"
#include "avcap/spacetime.hpp"

namespace avcap::val {

using analytics::Policy;
using analytics::RoadConfig;

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long n_runs = 0;
};

/// Mean and standard error of the mean over independent runs.
MonteCarloEstimate summarize(const std::vector<double>& runs);

struct SemiMarkovConfig {
  double p_transition = 0.0;     // per normal sojourn
  double sojourn_normal = 0.1;   // tau
  double sojourn_abnormal = 2700.0;
  double horizon = 1e7;
  double s_plus = 1.0;           // capacity of the normal state
  long long n_runs = 20;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct SemiMarkovResult {
  MonteCarloEstimate occupancy;  // fraction of time abnormal
  MonteCarloEstimate capacity;   // time-average capacity
};

SemiMarkovResult run_semi_markov(const SemiMarkovConfig& cfg);

struct SpaceTimeRunSpec {
  Policy policy;
  RoadConfig road;
  double l = 5.0;
  double sigma_o = 0.05;
  int n_lanes = 1;
  bool lane_change = false;
  long long n_runs = 20;
  std::uint64_t seed = 0;
  int threads = 1;
  bool warm_start = true;  // start at -W so collisions before t = 0 are included
};

struct SpaceTimeEstimate {
  MonteCarloEstimate throughput;  // per lane, veh/s over [0, H)
  std::vector<std::vector<st::CollisionEvent>> events;  // per run
};

/// Random-collision space-time runs; throws st::OutOfRegime above the refusal level.
SpaceTimeEstimate run_spacetime(const SpaceTimeRunSpec& spec);

enum class Scenario { Baseline, Overlap, TwoLane };
std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct ExtensionReport {
  Scenario scenario = Scenario::Baseline;
  double analytic = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  long long n_runs = 0;
  double rel_gap = 0.0;  // (mc - analytic) / analytic
  std::vector<std::vector<st::CollisionEvent>> events;  // per run
};

ExtensionReport compare_extension(const Policy& pol, const RoadConfig& road, double l,
                                  double sigma_o, Scenario scenario, long long n_runs,
                                  std::uint64_t seed, int threads = 1);

struct GainEstimate {
  double analytic = 0.0;         // lane-change gain, veh/s per lane
  MonteCarloEstimate mc;         // same quantity from forced pairs
  double mean_extra_exits = 0.0; // per pair, both lanes
  long long pairs_with_gain = 0;
  double window = 0.0;
};

/// Lane-change gain from forced collision pairs, one per lane, with common random numbers.
GainEstimate lane_change_gain_mc(const Policy& pol, const RoadConfig& road, double l,
                                 double sigma_o, long long n_pairs, std::uint64_t seed,
                                 int threads = 1);

/// Event log rows: run,t_c,x_c,lane.
void write_event_log(std::ostream& os, const std::vector<std::vector<st::CollisionEvent>>& runs);

}  // namespace avcap::val

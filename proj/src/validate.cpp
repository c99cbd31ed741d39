#include "avcap/validate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "avcap/extensions.hpp"
#include "avcap/io.hpp"
#include "avcap/parallel.hpp"
#include "avcap/rng.hpp"

namespace avcap::val {

MonteCarloEstimate summarize(const std::vector<double>& runs) {
  MonteCarloEstimate e;
  e.n_runs = static_cast<long long>(runs.size());
  if (runs.empty()) throw std::invalid_argument("summarize: no runs");
  double sum = 0.0;
  for (double r : runs) sum += r;
  e.mean = sum / static_cast<double>(runs.size());
  if (runs.size() > 1) {
    double ss = 0.0;
    for (double r : runs) ss += (r - e.mean) * (r - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(runs.size() - 1) / static_cast<double>(runs.size()));
  }
  return e;
}

void SemiMarkovConfig::validate() const {
  if (!(p_transition >= 0.0 && p_transition <= 1.0)) {
    throw std::invalid_argument("semi-Markov: p_transition must lie in [0, 1]");
  }
  if (!(sojourn_normal > 0.0) || !(sojourn_abnormal > 0.0)) {
    throw std::invalid_argument("semi-Markov: sojourns must be positive");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("semi-Markov: horizon must be positive");
  if (n_runs < 1) throw std::invalid_argument("semi-Markov: n_runs >= 1");
}

namespace {

// Abnormal time within [0, horizon), starting in the normal state.
double semi_markov_abnormal_time(const SemiMarkovConfig& cfg, Rng& rng) {
  if (cfg.p_transition <= 0.0) return 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double log_q = std::log1p(-cfg.p_transition);
  double t = 0.0;
  double abnormal = 0.0;
  while (t < cfg.horizon) {
    double k = 1.0;  // normal sojourns until the transition, inclusive
    if (cfg.p_transition < 1.0) {
      double r = u(rng);
      while (r <= 0.0) r = u(rng);
      k += std::min(std::floor(std::log(r) / log_q), 1e300);
    }
    t += k * cfg.sojourn_normal;
    if (t >= cfg.horizon) break;
    abnormal += std::min(cfg.sojourn_abnormal, cfg.horizon - t);
    t += cfg.sojourn_abnormal;
  }
  return abnormal;
}

}  // namespace

SemiMarkovResult run_semi_markov(const SemiMarkovConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_runs);
  std::vector<double> occ(n), cap(n);
  parallel_for(n, static_cast<unsigned>(std::max(1, cfg.threads)), [&](std::size_t r) {
    Rng rng = make_rng(cfg.seed, {r});
    occ[r] = semi_markov_abnormal_time(cfg, rng) / cfg.horizon;
    cap[r] = (1.0 - occ[r]) * cfg.s_plus;
  });
  return {summarize(occ), summarize(cap)};
}

namespace {

st::SpaceTimeConfig base_config(const Policy& pol, const RoadConfig& road, double l,
                                double sigma_o) {
  st::SpaceTimeConfig c;
  c.policy = pol;
  c.road = road;
  c.l = l;
  c.sigma_o = sigma_o;
  return c;
}

}  // namespace

SpaceTimeEstimate run_spacetime(const SpaceTimeRunSpec& spec) {
  if (spec.n_runs < 1) throw std::invalid_argument("space-time: n_runs >= 1");
  const auto n = static_cast<std::size_t>(spec.n_runs);
  std::vector<double> thr(n);
  SpaceTimeEstimate out;
  out.events.resize(n);
  st::SpaceTimeConfig cfg = base_config(spec.policy, spec.road, spec.l, spec.sigma_o);
  cfg.n_lanes = spec.n_lanes;
  cfg.lane_change = spec.lane_change;
  cfg.t_start = spec.warm_start ? -st::stationary_window(spec.policy, spec.road, spec.l) : 0.0;
  // Fail fast on refusal before spawning workers.
  {
    st::SpaceTimeConfig probe = cfg;
    probe.t_end = probe.t_start + probe.road.tau;
    st::simulate(probe);
  }
  parallel_for(n, static_cast<unsigned>(std::max(1, spec.threads)), [&](std::size_t r) {
    st::SpaceTimeConfig c = cfg;
    c.seed = derive_seed(spec.seed, {r});
    const auto res = st::simulate(c);
    thr[r] = static_cast<double>(res.total_exits) / (spec.road.H * spec.n_lanes);
    out.events[r] = res.events;
  });
  out.throughput = summarize(thr);
  return out;
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Baseline: return "baseline";
    case Scenario::Overlap: return "overlap";
    case Scenario::TwoLane: return "two_lane";
  }
  return "?";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "baseline") return Scenario::Baseline;
  if (s == "overlap") return Scenario::Overlap;
  if (s == "two_lane") return Scenario::TwoLane;
  throw std::invalid_argument("unknown scenario: " + s);
}

ExtensionReport compare_extension(const Policy& pol, const RoadConfig& road, double l,
                                  double sigma_o, Scenario scenario, long long n_runs,
                                  std::uint64_t seed, int threads) {
  ExtensionReport rep;
  rep.scenario = scenario;
  SpaceTimeRunSpec spec;
  spec.policy = pol;
  spec.road = road;
  spec.l = l;
  spec.sigma_o = sigma_o;
  spec.n_runs = n_runs;
  spec.seed = seed;
  spec.threads = threads;
  switch (scenario) {
    case Scenario::Baseline:
      rep.analytic = ext::cic_one_hour(pol, road, l, sigma_o).value;
      break;
    case Scenario::Overlap:
      rep.analytic = ext::cic_overlap(pol, road, l, sigma_o);
      break;
    case Scenario::TwoLane:
      rep.analytic = ext::throughput_two_lane(pol, road, l, sigma_o);
      spec.n_lanes = 2;
      spec.lane_change = true;
      spec.road.n_lanes = 2;
      break;
  }
  const auto est = run_spacetime(spec);
  rep.mc_mean = est.throughput.mean;
  rep.mc_stderr = est.throughput.std_error;
  rep.n_runs = est.throughput.n_runs;
  rep.events = est.events;
  rep.rel_gap = rep.analytic != 0.0 ? (rep.mc_mean - rep.analytic) / rep.analytic : 0.0;
  return rep;
}

GainEstimate lane_change_gain_mc(const Policy& pol, const RoadConfig& road, double l,
                                 double sigma_o, long long n_pairs, std::uint64_t seed,
                                 int threads) {
  if (n_pairs < 2) throw std::invalid_argument("lane-change gain: n_pairs >= 2");
  RoadConfig r2 = road;
  r2.n_lanes = 2;
  GainEstimate g;
  g.analytic = ext::lane_change_gain(pol, r2, l, sigma_o).approx;
  g.window = st::stationary_window(pol, r2, l);
  const double H = r2.H;
  const double W = g.window;
  const double Np = ext::expected_collisions(pol, r2, l, sigma_o);
  const double scale = Np * Np * (H + W) * (H + W) / (2.0 * H * H * H);

  const auto n = static_cast<std::size_t>(n_pairs);
  std::vector<double> delta(n);
  parallel_for(n, static_cast<unsigned>(std::max(1, threads)), [&](std::size_t k) {
    Rng rng = make_rng(seed, {k});
    std::uniform_real_distribution<double> ut(-W, H), ux(0.0, r2.L);
    st::SpaceTimeConfig c = base_config(pol, r2, l, sigma_o);
    c.n_lanes = 2;
    c.random_collisions = false;
    c.t_start = -W;
    const double t0 = ut(rng), x0 = ux(rng), t1 = ut(rng), x1 = ux(rng);
    c.forced = {{t0, x0, 0}, {t1, x1, 1}};
    c.seed = derive_seed(seed, {k, 1});
    c.lane_change = false;
    const auto off = st::simulate(c);
    c.lane_change = true;
    const auto on = st::simulate(c);
    delta[k] = static_cast<double>(on.total_exits - off.total_exits);
  });
  double sum = 0.0;
  for (double d : delta) {
    sum += d;
    if (d > 0.0) ++g.pairs_with_gain;
  }
  g.mean_extra_exits = sum / static_cast<double>(n);
  std::vector<double> scaled(n);
  std::transform(delta.begin(), delta.end(), scaled.begin(), [&](double d) { return d * scale; });
  g.mc = summarize(scaled);
  return g;
}

void write_event_log(std::ostream& os, const std::vector<std::vector<st::CollisionEvent>>& runs) {
  io::CsvWriter w(os, {"run", "t_c", "x_c", "lane"});
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const auto& e : runs[r]) {
      w.cell(r).cell(e.t).cell(e.x).cell(e.lane);
      w.end_row();
    }
  }
}

}  // namespace avcap::val

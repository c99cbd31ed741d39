// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when a
// criterion fails that is not listed in --known-unattainable.
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "avcap/analytics.hpp"
#include "avcap/extensions.hpp"
#include "avcap/ingest.hpp"
#include "avcap/io.hpp"
#include "avcap/normal.hpp"
#include "avcap/numerics.hpp"
#include "avcap/optimize.hpp"
#include "avcap/simcore.hpp"
#include "avcap/spacetime.hpp"
#include "avcap/stats.hpp"
#include "avcap/validate.hpp"

using namespace avcap;
using analytics::Policy;
using analytics::RoadConfig;

namespace {

constexpr double kV50 = 50.0 / 3.6;
std::uint64_t g_seed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome()> run;
};

std::string f9(double x) { return io::fmt(x); }

// ---------------------------------------------------------------------------

Outcome equilibrium_gap() {
  const double g = sim::equilibrium_gap(sim::VehicleSpec{}, kV50);
  return {std::abs(g - 21.1546) <= 1e-3, "gap=" + f9(g) + " m"};
}

Outcome table1() {
  const std::vector<double> sig{std::sqrt(0.1), std::sqrt(0.5), 1.0};
  double worst = 0.0;
  std::string worst_cell;
  int over = 0, idx = 0;
  for (double sd : sig) {
    for (double sdv : sig) {
      for (double sa : sig) {
        const sim::NoiseSpec n{sd, sdv, sa, 0.05};
        const auto tr = sim::simulate_pair(sim::VehicleSpec{}, n, kV50, 3600.0, 0.1,
                                           derive_seed(g_seed, {1, static_cast<std::uint64_t>(idx++)}));
        const double e = stats::gaussian_fit_report(sim::post_warmup(tr.gap), 100).nrmse;
        if (e > 0.10) ++over;
        if (e > worst) {
          worst = e;
          worst_cell = "(" + f9(sd * sd) + "," + f9(sdv * sdv) + "," + f9(sa * sa) + ")";
        }
      }
    }
  }
  return {over == 0, "cells=27 over_0.10=" + std::to_string(over) + " max_nrmse=" + f9(worst) +
                         " at variances " + worst_cell};
}

Outcome table2() {
  std::vector<double> vg, eg;
  for (int i = 0; i < 9; ++i) vg.push_back((20.0 + 10.0 * i) / 3.6);
  for (int i = 0; i < 9; ++i) eg.push_back(1.0 + 0.5 * i);
  const auto rows = sim::variance_sweep(sim::VehicleSpec{}, sim::NoiseSpec{}, vg, eg, 3600.0, 0.1,
                                        derive_seed(g_seed, {2}));
  const auto fits = sim::fit_scaling_forms(rows);
  const sim::ScalingFit* best = &fits.front();
  double r2_v2eta = 0.0;
  for (const auto& f : fits) {
    if (f.r2_with_intercept > best->r2_with_intercept) best = &f;
    if (f.form == sim::ScalingForm::V2Eta) r2_v2eta = f.r2_with_intercept;
  }
  std::ostringstream d;
  d << "R2(v^2*eta)=" << f9(r2_v2eta) << " best=" << sim::to_string(best->form) << " R2=" << f9(best->r2_with_intercept);
  for (const auto& f : fits) d << " " << sim::to_string(f.form) << ":" << f9(f.r2_with_intercept);
  return {best->form == sim::ScalingForm::V2Eta && r2_v2eta >= 0.85, d.str()};
}

// Independent oracles: quadrature of the gap density and a 50-digit erfc.
double quad_p(double v, double eta, double l, double s) {
  using boost::math::quadrature::gauss_kronrod;
  const double mu = v * eta, sd = v * s * std::sqrt(eta);
  auto dens = [&](double x) {
    const double u = (x - mu) / sd;
    return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * M_PI));
  };
  return gauss_kronrod<double, 61>::integrate(dens, std::min(l, mu) - 40.0 * sd, l, 25, 1e-15);
}

double big_log10_p(double v, double eta, double l, double s) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const Big z = (Big(l) - Big(v) * Big(eta)) / (Big(v) * Big(s) * boost::multiprecision::sqrt(Big(eta)));
  const Big p = boost::math::erfc(-z / boost::multiprecision::sqrt(Big(2))) / 2;
  return static_cast<double>(boost::multiprecision::log10(p));
}

Outcome collision_probability() {
  std::mt19937_64 rng(derive_seed(g_seed, {3}));
  std::uniform_real_distribution<double> uv(3.0, 40.0), ue(0.2, 5.0), ul(3.0, 8.0), us(0.02, 0.8);
  int n = 0;
  double worst = 0.0;
  while (n < 1000) {
    const double v = uv(rng), eta = ue(rng), l = ul(rng), s = us(rng);
    const double p = analytics::collision_probability({v, eta}, l, s);
    if (p < 1e-12) continue;
    worst = std::max(worst, std::abs(p / quad_p(v, eta, l, s) - 1.0));
    ++n;
  }
  // Log space: sweep z so that p spans 1e-1 .. 1e-300.
  double worst_log = 0.0;
  int n_log = 0;
  for (double target = -1.0; target >= -300.0; target -= 1.0) {
    const double z = normal::quantile_from_log(target * std::log(10.0));
    const double eta = 1.5, s = 0.02;
    // Choose v so that (l - v eta)/(v s sqrt(eta)) = z with l = 5.
    const double v = 5.0 / (eta + z * s * std::sqrt(eta));
    if (!(v > 0.0)) continue;
    const double got = analytics::log10_collision_probability({v, eta}, 5.0, s);
    const double want = big_log10_p(v, eta, 5.0, s);
    worst_log = std::max(worst_log, std::abs(got / want - 1.0));
    ++n_log;
  }
  return {worst <= 1e-9 && worst_log <= 1e-6,
          "tuples=" + std::to_string(n) + " max_rel_err=" + f9(worst) + " log10_points=" +
              std::to_string(n_log) + " max_log10_rel_err=" + f9(worst_log)};
}

Outcome semi_markov() {
  const RoadConfig road;  // L = 5000, tau = 0.1, linear clearance time
  std::ostringstream d;
  bool ok = true;
  int k = 0;
  for (double target : {1e-3, 0.1, 0.5}) {
    // Headway at 50 km/h that yields the target weight under sigma_o = 0.05.
    auto f = [&](double eta) {
      return std::log(analytics::abnormal_weight({kV50, eta}, road, 5.0, 0.05)) - std::log(target);
    };
    const double eta = numerics::brent(f, 0.5, 3.0, 1e-14).x;
    const auto rep = analytics::cic({kV50, eta}, road, 5.0, 0.05);
    val::SemiMarkovConfig c;
    c.p_transition = rep.P;
    c.sojourn_normal = road.tau;
    c.sojourn_abnormal = rep.T;
    c.horizon = 1e9;
    c.n_runs = 20;
    c.s_plus = rep.s_plus;
    c.seed = derive_seed(g_seed, {4, static_cast<std::uint64_t>(k++)});
    const auto est = val::run_semi_markov(c);
    const double nse = std::abs(est.occupancy.mean - rep.lambda) / est.occupancy.std_error;
    ok = ok && nse <= 3.0;
    d << "lambda=" << f9(rep.lambda) << " mc=" << f9(est.occupancy.mean) << "+-" << f9(est.occupancy.std_error)
      << " (" << f9(nse) << " se); ";
  }
  val::SemiMarkovConfig one;
  one.p_transition = 1.0;
  one.sojourn_normal = 0.1;
  one.sojourn_abnormal = 2700.0;
  one.horizon = 1e7;
  one.n_runs = 5;
  one.seed = derive_seed(g_seed, {4, 9});
  const double occ = val::run_semi_markov(one).occupancy.mean;
  const double want = 2700.0 / 2700.1;
  ok = ok && std::abs(occ - want) <= 1e-3;
  d << "P=1: " << f9(occ) << " vs " << f9(want);
  return {ok, d.str()};
}

Outcome optimizer_properties() {
  const RoadConfig road;
  const double l = 5.0, sig = 0.05;
  std::ostringstream d;
  bool ok = true;
  std::mt19937_64 rng(derive_seed(g_seed, {5}));

  // Bijection.
  std::uniform_real_distribution<double> uv(20.0 / 3.6, 100.0 / 3.6), ulp(-200.0, -2.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double v = uv(rng), p_hat = std::pow(10.0, ulp(rng));
    const double eta = opt::eta_hat(v, p_hat, l, sig);
    worst = std::max(worst, std::abs(analytics::collision_probability({v, eta}, l, sig) / p_hat - 1.0));
  }
  ok = ok && worst <= 1e-9;
  d << "bijection_max_rel=" << f9(worst);

  // Iso-probability slope.
  bool slope = true;
  for (double p_hat : {1e-6, 1e-8, 1e-10, 1e-20}) {
    double prev = INFINITY;
    for (int i = 0; i < 50; ++i) {
      const double v = (20.0 + 80.0 * i / 49.0) / 3.6;
      const double e = opt::eta_hat(v, p_hat, l, sig);
      slope = slope && e < prev;
      prev = e;
    }
  }
  ok = ok && slope;
  d << " slope_negative=" << slope;

  // Capacity along the optimal-headway curve rises with speed.
  bool prop1 = true;
  for (double p_hat : {1e-8, 1e-10}) {
    const auto r = opt::maximize_capacity(20.0 / 3.6, 100.0 / 3.6, p_hat, road, l, sig, 50);
    for (std::size_t i = 1; i < r.curve.size(); ++i) {
      prop1 = prop1 && r.curve[i].s > r.curve[i - 1].s * (1.0 + 1e-12);
    }
  }
  ok = ok && prop1;
  d << " capacity_curve_increasing=" << prop1;

  // Collision probability along the critical-headway curve falls with speed.
  bool prop2 = true;
  for (double s_hat_vph : {1200.0, 1500.0, 1800.0}) {
    const auto r = opt::minimize_collision(20.0 / 3.6, 100.0 / 3.6, s_hat_vph / 3600.0, road, l, sig, 50);
    double prev = INFINITY;
    for (const auto& c : r.curve) {
      if (c.status != opt::Status::Ok) continue;
      const double lp = analytics::log_collision_probability({c.v, c.eta}, l, sig);
      prop2 = prop2 && lp < prev;
      prev = lp;
    }
  }
  ok = ok && prop2;
  d << " safety_curve_decreasing=" << prop2;

  // Dense grid-scan oracle on 10 small instances per optimizer.
  std::uniform_real_distribution<double> ulo(20.0, 60.0), uspan(10.0, 40.0), uph(-12.0, -4.0),
      ush(900.0, 1600.0), usig(0.03, 0.08);
  double worst_cap = 0.0, worst_safe = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const double vlo = ulo(rng) / 3.6, vhi = vlo + uspan(rng) / 3.6, s = usig(rng);
    const double p_hat = std::pow(10.0, uph(rng));
    const double s_hat = ush(rng) / 3600.0;
    const auto cap = opt::maximize_capacity(vlo, vhi, p_hat, road, l, s, 40);
    const auto safe = opt::minimize_collision(vlo, vhi, s_hat, road, l, s, 40);
    double best_s = 0.0, best_lp = INFINITY;
    for (int i = 0; i < 200; ++i) {
      const double v = vlo + (vhi - vlo) * i / 199.0;
      for (int j = 0; j < 2000; ++j) {
        const double eta = 0.2 + 4.8 * j / 1999.0;
        const double lp = analytics::log_collision_probability({v, eta}, l, s);
        const double sv = analytics::cic_value({v, eta}, road, l, s);
        if (lp <= std::log(p_hat)) best_s = std::max(best_s, sv);
        if (sv >= s_hat) best_lp = std::min(best_lp, lp);
      }
    }
    worst_cap = std::max(worst_cap, (best_s - cap.report.s) / best_s);
    if (safe.status == opt::Status::Ok && std::isfinite(best_lp)) {
      const double lp = analytics::log_collision_probability({safe.v_opt, safe.eta_opt}, l, s);
      worst_safe = std::max(worst_safe, std::expm1(lp - best_lp));
    } else if (std::isfinite(best_lp)) {
      worst_safe = INFINITY;  // grid found a feasible point the optimizer missed
    }
  }
  ok = ok && worst_cap <= 1e-3 && worst_safe <= 1e-3;
  d << " grid_shortfall_capacity=" << f9(std::max(0.0, worst_cap))
    << " grid_excess_p_safety=" << f9(std::max(0.0, worst_safe));
  return {ok, d.str()};
}

Outcome binding_switch() {
  const RoadConfig road;
  int both = 0;
  std::string first;
  for (int i = 0; i <= 80; ++i) {
    const double kmh = 20.0 + i;
    const auto a = opt::optimal_headway_capacity(kmh / 3.6, 1e-8, road, 5.0, 0.05);
    const auto b = opt::optimal_headway_capacity(kmh / 3.6, 1e-10, road, 5.0, 0.05);
    if (a.binding == opt::Binding::InteriorStationary && b.binding == opt::Binding::ConstraintBinding) {
      if (both++ == 0) first = f9(kmh);
    }
  }
  return {both > 0, "speeds_with_switch=" + std::to_string(both) + "/81 first_at_kmh=" + first};
}

Outcome extension_consistency() {
  RoadConfig road;
  road.n_lanes = 2;
  double worst_fact = 0.0;
  for (double s = 0.05; s <= 0.2; s += 0.01) {
    for (double eta = 1.0; eta <= 5.0; eta += 0.1) {
      const auto t = ext::overlap_terms({kV50, eta}, road, 5.0, s);
      if (t.factored != 0.0) worst_fact = std::max(worst_fact, std::abs(t.expanded / t.factored - 1.0));
    }
  }
  int n_first = 0;
  bool first_ok = true;
  for (double s = 0.05; s <= 0.25; s += 0.005) {
    for (double kmh = 20.0; kmh <= 100.0; kmh += 10.0) {
      for (double eta = 0.8; eta <= 5.0; eta += 0.05) {
        const Policy pol{kmh / 3.6, eta};
        const auto rep = analytics::cic(pol, road, 5.0, s);
        const double x = rep.T / road.tau * rep.P;
        if (x > 0.01) continue;
        const double one = ext::cic_one_hour(pol, road, 5.0, s).value;
        first_ok = first_ok && std::abs(one - rep.s) / rep.s <= x * x * (1.0 + 1e-9) + 1e-15;
        ++n_first;
      }
    }
  }
  bool order = true, negligible = true;
  int n_order = 0;
  double max_gap_late = 0.0;
  for (double eta = 1.5; eta <= 5.0 + 1e-9; eta += 0.01) {
    const auto r = ext::throughput_report({kV50, eta}, road, 5.0, 0.05);
    if (r.expected_collisions > 1.0) continue;
    ++n_order;
    order = order && r.s_two_lane >= r.s_overlap && r.s_overlap >= r.s_baseline;
    if (eta > 2.5) {
      max_gap_late = std::max(max_gap_late, (r.s_two_lane - r.s_baseline) / r.s_plus);
      negligible = negligible && r.s_two_lane - r.s_baseline <= 1e-3 * r.s_plus;
    }
  }
  return {worst_fact <= 1e-12 && first_ok && n_first > 0 && order && negligible && n_order > 0,
          "expanded_vs_factored_max_rel=" + f9(worst_fact) + " first_order_points=" + std::to_string(n_first) +
              " first_order_ok=" + std::to_string(first_ok) + " ordering_points=" + std::to_string(n_order) +
              " ordering_ok=" + std::to_string(order) + " max_gap_over_s+_eta>2.5=" + f9(max_gap_late)};
}

Outcome spacetime() {
  st::SpaceTimeConfig c;
  c.policy = {kV50, 1.5};
  c.road.L = 2000.0;
  c.road.tct = analytics::TctModel::fixed(900.0);
  c.road.D = 10.0;
  c.random_collisions = false;
  c.seed = derive_seed(g_seed, {8});
  const double L = c.road.L, dt = c.road.tau, T = 900.0;
  std::ostringstream d;

  auto single = c;
  single.t_start = -30.0;
  single.probes = {0.0, L / 4.0, L / 2.0, 3.0 * L / 4.0, L};
  single.forced = {{0.0, L / 2.0, 0}};
  const auto r1 = st::simulate(single);
  bool probes_ok = true;
  d << "durations:";
  for (const auto& p : r1.probes) {
    const double dur = st::abnormal_duration(p, c.policy.eta);
    probes_ok = probes_ok && std::abs(dur - T) <= dt + 1e-9;
    d << " " << f9(dur);
  }

  auto one = c;
  one.forced = {{0.0, L / 2.0, 0}};
  auto two = one;
  two.forced.push_back({10.0, L / 4.0, 0});
  const auto e1 = st::simulate(one).total_exits, e2 = st::simulate(two).total_exits;
  const bool overlap_ok = std::llabs(e2 - e1) <= 1;
  d << "; exits one=" << e1 << " two=" << e2;

  RoadConfig road = c.road;
  road.n_lanes = 2;
  const auto g = val::lane_change_gain_mc(c.policy, road, 5.0, 0.18, 200, derive_seed(g_seed, {9}));
  const double nse = std::abs(g.mc.mean - g.analytic) / g.mc.std_error;
  const bool gain_ok = nse <= 3.0;
  d << "; gain analytic=" << f9(g.analytic) << " mc=" << f9(g.mc.mean) << "+-" << f9(g.mc.std_error) << " ("
    << f9(nse) << " se, pairs=200, with_gain=" << g.pairs_with_gain << ")";
  return {probes_ok && overlap_ok && gain_ok, d.str()};
}

Outcome ingest_substitute() {
  std::mt19937_64 rng(derive_seed(g_seed, {10}));
  std::vector<ingest::CarFollowRecord> recs;
  std::uniform_real_distribution<double> um(10.0, 40.0), us(0.2, 3.0);
  std::normal_distribution<double> z(0.0, 1.0), jitter(0.0, 0.05);
  for (int c = 0; c < 40; ++c) {
    const double m = um(rng), s = us(rng);
    const int n = 50 + c * 7;
    for (int i = 0; i < n; ++i) {
      const double vl = 20.2 + jitter(rng);
      recs.push_back({"case" + std::to_string(c), 0.1 * i, m + s * z(rng), vl, vl + 0.5 * z(rng), 0.0});
    }
  }
  const auto once = ingest::filter_stable(recs, ingest::FilterSpec{});
  const auto twice = ingest::filter_stable(once.records, ingest::FilterSpec{});
  const bool idem = twice.records == once.records;
  const auto norm = ingest::normalize_gaps(once.records);
  // Per-case moments of the normalized samples.
  double worst_mean = 0.0, worst_var = 0.0;
  std::size_t off = 0;
  std::vector<std::size_t> sizes;
  {
    std::string cur;
    for (const auto& r : once.records) {
      if (r.case_id != cur) {
        sizes.push_back(0);
        cur = r.case_id;
      }
      ++sizes.back();
    }
  }
  for (std::size_t n : sizes) {
    if (n < 10) continue;
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += norm.samples[off + i];
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) v += (norm.samples[off + i] - m) * (norm.samples[off + i] - m);
    v /= static_cast<double>(n);
    worst_mean = std::max(worst_mean, std::abs(m));
    worst_var = std::max(worst_var, std::abs(v - 1.0));
    off += n;
  }
  const bool ok = idem && worst_mean <= 1e-9 && worst_var <= 1e-6 && off == norm.samples.size();
  return {ok, "cases=" + std::to_string(norm.cases_used.size()) + " max|mean|=" + f9(worst_mean) +
                  " max|var-1|=" + f9(worst_var) + " filter_idempotent=" + std::to_string(idem)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> known;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-unattainable" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string id; std::getline(ss, id, ',');) known.insert(id);
    } else if (a == "--seed" && i + 1 < argc) {
      g_seed = std::stoull(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--seed N] [--known-unattainable id,id]\n");
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {"equilibrium_gap", "equilibrium gap at 50 km/h = 21.1546 m +- 1e-3", equilibrium_gap},
      {"table1", "27 noise cells, 3600 s, Gaussian-fit NRMSE <= 0.10 everywhere", table1},
      {"table2", "speed/headway grid: v^2*eta has the highest R^2 and R^2 >= 0.85", table2},
      {"collision_probability", "p vs quadrature <= 1e-9 rel; log10 p <= 1e-6 rel to 1e-300", collision_probability},
      {"semi_markov", "occupancy within 3 SE of the closed form; P=1 within 1e-3", semi_markov},
      {"optimizer_properties", "bijection, slope sign, monotone curves, grid oracles within 0.1%", optimizer_properties},
      {"binding_switch", "p_hat 1e-8 interior vs 1e-10 constraint at some speed in [20,100] km/h", binding_switch},
      {"extension_consistency", "expanded=factored, first-order gap, ordering, crossover at 2.5 s", extension_consistency},
      {"spacetime", "probe durations T +- dt, overlap +-1 vehicle, lane-change gain within 3 SE", spacetime},
      {"ingest_substitute", "normalized mean 0 +- 1e-9, variance 1 +- 1e-6, filter idempotent", ingest_substitute},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool excused = !o.pass && known.count(c.id) > 0;
    if (!o.pass && !excused) ++unexpected;
    std::printf("%s %s: %s | %s | %.1fs%s\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                o.detail.c_str(), secs, excused ? " | known unattainable, see README" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}

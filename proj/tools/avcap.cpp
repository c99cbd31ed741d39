#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "avcap/analytics.hpp"
#include "avcap/extensions.hpp"
#include "avcap/ingest.hpp"
#include "avcap/io.hpp"
#include "avcap/numerics.hpp"
#include "avcap/optimize.hpp"
#include "avcap/parallel.hpp"
#include "avcap/rng.hpp"
#include "avcap/simcore.hpp"
#include "avcap/spacetime.hpp"
#include "avcap/stats.hpp"
#include "avcap/units.hpp"
#include "avcap/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace avcap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rethrows anything raised while checking arguments as a usage error.
template <class Fn>
auto checked(const std::string& flag, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

struct Global {
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string format = "csv";
  int threads = 1;

  unsigned workers() const { return threads <= 0 ? default_threads() : static_cast<unsigned>(threads); }
  fs::path path(const std::string& name) const { return fs::path(out) / name; }
  std::string table_name(const std::string& stem) const { return stem + "." + format; }
};

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return os;
}

void write_table(const fs::path& p, const Table& t, const std::string& format) {
  auto os = open_out(p);
  if (format == "json") {
    json arr = json::array();
    for (const auto& row : t.rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::visit([&](const auto& v) { obj[t.header[i]] = v; }, row[i]);
      }
      arr.push_back(std::move(obj));
    }
    io::write_json(os, std::move(arr));
    return;
  }
  io::CsvWriter w(os, t.header);
  for (const auto& row : t.rows) {
    for (const auto& c : row) std::visit([&](const auto& v) { w.cell(v); }, c);
    w.end_row();
  }
}

void write_json_file(const fs::path& p, json j) {
  auto os = open_out(p);
  io::write_json(os, std::move(j));
}

std::vector<double> grid(double lo, double hi, int n, const std::string& flag) {
  if (n < 1) throw UsageError(flag + ": need at least one point");
  if (n == 1) return {lo};
  if (!(hi > lo)) throw UsageError(flag + ": max must exceed min");
  return numerics::linspace(lo, hi, static_cast<std::size_t>(n));
}

// ---- shared option groups -------------------------------------------------

struct VehicleOpts {
  sim::VehicleSpec veh;
  std::string v0 = "120kmh";
  void add(CLI::App* app) {
    app->add_option("--a", veh.a, "max acceleration (m/s^2)");
    app->add_option("--b", veh.b, "comfortable deceleration (m/s^2)");
    app->add_option("--v0", v0, "desired speed (kmh|ms suffix)");
    app->add_option("--xi", veh.xi, "acceleration exponent");
    app->add_option("--d0", veh.d0, "jam distance (m)");
    app->add_option("--h0", veh.h0, "time headway (s)");
    app->add_option("--length", veh.l, "vehicle length (m)");
  }
  sim::VehicleSpec resolve() {
    veh.v0 = checked("--v0", [&] { return units::parse_speed(v0); });
    checked("vehicle", [&] { veh.validate(); return 0; });
    return veh;
  }
};

struct NoiseOpts {
  sim::NoiseSpec noise;
  void add(CLI::App* app) {
    app->add_option("--sigma-d", noise.sigma_d, "gap perception noise std dev (m)");
    app->add_option("--sigma-dv", noise.sigma_dv, "relative speed noise std dev (m/s)");
    app->add_option("--sigma-acc", noise.sigma_acc, "actuation noise std dev (m/s^2)");
  }
  sim::NoiseSpec resolve() {
    checked("noise", [&] { noise.validate(); return 0; });
    return noise;
  }
};

struct RoadOpts {
  analytics::RoadConfig road;
  std::string tct = "linear";
  double l = 5.0;
  double sigma_o = 0.05;
  void add(CLI::App* app) {
    app->add_option("--road-length", road.L, "segment length L (m)");
    app->add_option("--tau", road.tau, "operational time step (s)");
    app->add_option("--tct", tct, "clearance time: linear | fixed:SECONDS");
    app->add_option("--lanes", road.n_lanes, "lane count");
    app->add_option("--lane-gap", road.D, "lane-change gap D (m)");
    app->add_option("--horizon", road.H, "study period H (s)");
    app->add_option("--l", l, "vehicle length l (m)");
    app->add_option("--sigma-o", sigma_o, "aggregate gap noise per unit speed and root headway");
  }
  void resolve() {
    road.tct = checked("--tct", [&] { return units::parse_tct(tct); });
    checked("road", [&] { road.validate(); return 0; });
    if (!(l > 0.0)) throw UsageError("--l: must be positive");
    if (!(sigma_o >= 0.0)) throw UsageError("--sigma-o: must be non-negative");
  }
};

json report_json(const analytics::CapacityReport& r) {
  return {{"p", r.p}, {"log10_p", r.log10_p}, {"P", r.P},         {"s_plus", r.s_plus},
          {"lambda", r.lambda}, {"s", r.s},   {"c", r.c},         {"T", r.T}};
}

json fit_json(const stats::FitReport& r) {
  return {{"mu", r.fit.mu}, {"var", r.fit.var}, {"n", r.fit.n}, {"nrmse", r.nrmse}};
}

Table histogram_table(const stats::FitReport& r) {
  Table t{{"bin_left", "bin_right", "count", "expected_count"}, {}};
  for (std::size_t i = 0; i < r.hist.counts.size(); ++i) {
    t.rows.push_back({r.hist.edges[i], r.hist.edges[i + 1],
                      static_cast<long long>(r.hist.counts[i]), r.expected[i]});
  }
  return t;
}

// ---- simulate -------------------------------------------------------------

struct SimulateCmd {
  VehicleOpts veh;
  NoiseOpts noise;
  std::string v_lead = "50kmh";
  double duration = 3600.0;
  double dt = 0.1;
  int followers = 1;
  int bins = 100;

  void add(CLI::App* app) {
    veh.add(app);
    noise.add(app);
    app->add_option("--v-lead", v_lead, "leader speed (kmh|ms suffix)");
    app->add_option("--duration", duration, "simulated time (s)");
    app->add_option("--dt", dt, "integration step (s)");
    app->add_option("--followers", followers, "string length");
    app->add_option("--bins", bins, "histogram bins");
  }

  int run(const Global& g) {
    const auto vs = veh.resolve();
    const auto ns = noise.resolve();
    const double v = checked("--v-lead", [&] { return units::parse_speed(v_lead); });
    if (!(dt > 0.0)) throw UsageError("--dt: must be positive");
    if (!(duration >= 100.0 * dt)) throw UsageError("--duration: must be at least 100 steps");
    if (followers < 1) throw UsageError("--followers: must be >= 1");
    if (bins < 2) throw UsageError("--bins: must be >= 2");
    if (!(v > 0.0 && v < vs.v0)) throw UsageError("--v-lead: must lie in (0, v0)");

    const auto trajs = sim::simulate_string(vs, ns, static_cast<std::size_t>(followers), v,
                                            duration, dt, g.seed);
    for (std::size_t k = 0; k < trajs.size(); ++k) {
      const auto& tr = trajs[k];
      Table t{{"t", "gap", "v_e", "accel"}, {}};
      t.rows.reserve(tr.size());
      for (std::size_t i = 0; i < tr.size(); ++i) t.rows.push_back({tr.t[i], tr.gap[i], tr.v_e[i], tr.accel[i]});
      const std::string stem = trajs.size() == 1 ? "trajectory" : "trajectory_" + std::to_string(k + 1);
      write_table(g.path(g.table_name(stem)), t, g.format);
    }
    const auto& last = trajs.back();
    const auto rep = stats::gaussian_fit_report(sim::post_warmup(last.gap), static_cast<std::size_t>(bins));
    write_table(g.path(g.table_name("histogram")), histogram_table(rep), g.format);
    json fit = fit_json(rep);
    fit["clamp_count"] = last.clamp_count;
    write_json_file(g.path("fit.json"), fit);
    std::cout << "nrmse " << io::fmt(rep.nrmse) << " mu " << io::fmt(rep.fit.mu) << " var "
              << io::fmt(rep.fit.var) << " n " << rep.fit.n << "\n";
    return kExitOk;
  }
};

// ---- table1 ---------------------------------------------------------------

struct Table1Cmd {
  VehicleOpts veh;
  std::vector<double> sigma_set;  // std devs
  std::string v_lead = "50kmh";
  double duration = 3600.0;
  double dt = 0.1;
  int bins = 100;

  void add(CLI::App* app) {
    veh.add(app);
    app->add_option("--sigma-set", sigma_set,
                    "per-channel noise std devs (default: square roots of 0.1, 0.5, 1)");
    app->add_option("--v-lead", v_lead, "leader speed (kmh|ms suffix)");
    app->add_option("--duration", duration, "simulated time per cell (s)");
    app->add_option("--dt", dt, "integration step (s)");
    app->add_option("--bins", bins, "histogram bins");
  }

  int run(const Global& g) {
    const auto vs = veh.resolve();
    const double v = checked("--v-lead", [&] { return units::parse_speed(v_lead); });
    if (sigma_set.empty()) sigma_set = {std::sqrt(0.1), std::sqrt(0.5), 1.0};
    for (double s : sigma_set) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw UsageError("--sigma-set: values must be >= 0");
    }
    if (!(dt > 0.0)) throw UsageError("--dt: must be positive");
    if (!(duration >= 100.0 * dt)) throw UsageError("--duration: must be at least 100 steps");
    if (!(v > 0.0 && v < vs.v0)) throw UsageError("--v-lead: must lie in (0, v0)");

    struct CellOut {
      sim::NoiseSpec noise;
      double nrmse = std::nan(""), mu = std::nan(""), var = std::nan("");
      long long n = 0;
      bool failed = false;
    };
    const std::size_t m = sigma_set.size();
    std::vector<CellOut> cells(m * m * m);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      cells[i].noise.sigma_d = sigma_set[i / (m * m)];
      cells[i].noise.sigma_dv = sigma_set[(i / m) % m];
      cells[i].noise.sigma_acc = sigma_set[i % m];
    }
    parallel_for(cells.size(), g.workers(), [&](std::size_t i) {
      auto& c = cells[i];
      try {
        const auto tr = sim::simulate_pair(vs, c.noise, v, duration, dt, derive_seed(g.seed, {i}));
        const auto rep = stats::gaussian_fit_report(sim::post_warmup(tr.gap), static_cast<std::size_t>(bins));
        c.nrmse = rep.nrmse;
        c.mu = rep.fit.mu;
        c.var = rep.fit.var;
        c.n = static_cast<long long>(rep.fit.n);
      } catch (const std::runtime_error&) {
        c.failed = true;
      }
    });
    Table t{{"sigma_d", "sigma_dv", "sigma_acc", "nrmse", "mu", "var", "n", "failed"}, {}};
    double worst = 0.0;
    for (const auto& c : cells) {
      t.rows.push_back({c.noise.sigma_d, c.noise.sigma_dv, c.noise.sigma_acc, c.nrmse, c.mu, c.var,
                        c.n, static_cast<long long>(c.failed)});
      if (!c.failed) worst = std::max(worst, c.nrmse);
    }
    write_table(g.path(g.table_name("table1")), t, g.format);
    std::cout << "cells " << cells.size() << " max_nrmse " << io::fmt(worst) << "\n";
    return kExitOk;
  }
};

// ---- sweep-variance -------------------------------------------------------

struct SweepCmd {
  VehicleOpts veh;
  NoiseOpts noise;
  std::string v_min = "20kmh", v_max = "100kmh";
  int v_steps = 9;
  double eta_min = 1.0, eta_max = 5.0;
  int eta_steps = 9;
  double duration = 3600.0;
  double dt = 0.1;
  int replicates = 1;

  void add(CLI::App* app) {
    veh.add(app);
    noise.add(app);
    app->add_option("--v-min", v_min, "lowest speed (kmh|ms suffix)");
    app->add_option("--v-max", v_max, "highest speed (kmh|ms suffix)");
    app->add_option("--v-steps", v_steps, "speed grid points");
    app->add_option("--eta-min", eta_min, "lowest headway (s)");
    app->add_option("--eta-max", eta_max, "highest headway (s)");
    app->add_option("--eta-steps", eta_steps, "headway grid points");
    app->add_option("--duration", duration, "simulated time per cell (s)");
    app->add_option("--dt", dt, "integration step (s)");
    app->add_option("--replicates", replicates, "runs per cell");
  }

  int run(const Global& g) {
    const auto vs = veh.resolve();
    const auto ns = noise.resolve();
    const double vlo = checked("--v-min", [&] { return units::parse_speed(v_min); });
    const double vhi = checked("--v-max", [&] { return units::parse_speed(v_max); });
    if (!(vlo > 0.0 && vhi < vs.v0)) throw UsageError("--v-min/--v-max: speeds must lie in (0, v0)");
    if (!(eta_min > 0.0)) throw UsageError("--eta-min: must be positive");
    if (!(dt > 0.0)) throw UsageError("--dt: must be positive");
    if (!(duration >= 100.0 * dt)) throw UsageError("--duration: must be at least 100 steps");
    if (replicates < 1) throw UsageError("--replicates: must be >= 1");
    const auto vg = grid(vlo, vhi, v_steps, "--v-steps");
    const auto eg = grid(eta_min, eta_max, eta_steps, "--eta-steps");

    const auto rows = sim::variance_sweep(vs, ns, vg, eg, duration, dt, g.seed,
                                          static_cast<std::size_t>(replicates), g.workers());
    Table t{{"v", "eta", "var_gap", "collided", "seed"}, {}};
    for (const auto& r : rows) {
      t.rows.push_back({r.v, r.eta, r.var_gap, static_cast<long long>(r.collided),
                        std::to_string(r.seed)});
    }
    write_table(g.path(g.table_name("sweep")), t, g.format);

    Table f{{"form", "slope_with_intercept", "intercept", "r2_with_intercept", "slope_no_intercept",
             "r2_no_intercept"},
            {}};
    for (const auto& fit : sim::fit_scaling_forms(rows)) {
      f.rows.push_back({sim::to_string(fit.form), fit.slope_with_intercept, fit.intercept,
                        fit.r2_with_intercept, fit.slope_no_intercept, fit.r2_no_intercept});
      std::cout << sim::to_string(fit.form) << " r2 " << io::fmt(fit.r2_with_intercept) << "\n";
    }
    write_table(g.path(g.table_name("fits")), f, g.format);
    return kExitOk;
  }
};

// ---- capacity -------------------------------------------------------------

struct CapacityCmd {
  RoadOpts road;
  std::string v = "50kmh";
  double eta = 2.0;
  bool surface = false;
  std::string v_min = "20kmh", v_max = "100kmh";
  int v_steps = 81;
  double eta_min = 0.5, eta_max = 5.0;
  int eta_steps = 91;

  void add(CLI::App* app) {
    road.add(app);
    app->add_option("--v", v, "speed (kmh|ms suffix)");
    app->add_option("--eta", eta, "headway (s)");
    app->add_flag("--grid", surface, "emit the capacity surface over a (v, eta) grid");
    app->add_option("--v-min", v_min, "grid lowest speed");
    app->add_option("--v-max", v_max, "grid highest speed");
    app->add_option("--v-steps", v_steps, "grid speed points");
    app->add_option("--eta-min", eta_min, "grid lowest headway (s)");
    app->add_option("--eta-max", eta_max, "grid highest headway (s)");
    app->add_option("--eta-steps", eta_steps, "grid headway points");
  }

  int run(const Global& g) {
    road.resolve();
    if (surface) {
      const double vlo = checked("--v-min", [&] { return units::parse_speed(v_min); });
      const double vhi = checked("--v-max", [&] { return units::parse_speed(v_max); });
      if (!(vlo > 0.0)) throw UsageError("--v-min: must be positive");
      if (!(eta_min > 0.0)) throw UsageError("--eta-min: must be positive");
      const auto cells = analytics::cic_surface(grid(vlo, vhi, v_steps, "--v-steps"),
                                                grid(eta_min, eta_max, eta_steps, "--eta-steps"),
                                                road.road, road.l, road.sigma_o);
      Table t{{"v", "eta", "p", "log10_p", "P", "s_plus", "lambda", "s", "T"}, {}};
      for (const auto& c : cells) {
        const auto& r = c.report;
        t.rows.push_back({c.v, c.eta, r.p, r.log10_p, r.P, r.s_plus, r.lambda, r.s, r.T});
      }
      write_table(g.path(g.table_name("surface")), t, g.format);
      std::cout << "cells " << cells.size() << "\n";
      return kExitOk;
    }
    const analytics::Policy pol{checked("--v", [&] { return units::parse_speed(v); }), eta};
    checked("--v/--eta", [&] { pol.validate(); return 0; });
    const auto r = analytics::cic(pol, road.road, road.l, road.sigma_o);
    json j = report_json(r);
    j["v"] = pol.v;
    j["eta"] = pol.eta;
    write_json_file(g.path("capacity.json"), j);
    std::cout << "s " << io::fmt(r.s) << " veh/s (" << io::fmt(r.s * 3600.0) << " vph) p "
              << io::fmt(r.p) << " lambda " << io::fmt(r.lambda) << "\n";
    return kExitOk;
  }
};

// ---- optimize -------------------------------------------------------------

struct OptimizeCmd {
  RoadOpts road;
  std::string objective = "capacity";
  std::optional<double> p_hat;
  std::optional<std::string> s_hat;
  std::string v_min = "20kmh", v_max = "100kmh";
  int n_speeds = 200;

  void add(CLI::App* app) {
    road.add(app);
    app->add_option("--objective", objective, "capacity | safety")
        ->check(CLI::IsMember({"capacity", "safety"}));
    app->add_option("--p-hat", p_hat, "collision probability ceiling (capacity objective)");
    app->add_option("--s-hat", s_hat, "capacity floor (vph suffix or veh/s; safety objective)");
    app->add_option("--v-min", v_min, "lowest speed (kmh|ms suffix)");
    app->add_option("--v-max", v_max, "highest speed (kmh|ms suffix)");
    app->add_option("--n-speeds", n_speeds, "speed grid points");
  }

  int run(const Global& g) {
    road.resolve();
    const double vlo = checked("--v-min", [&] { return units::parse_speed(v_min); });
    const double vhi = checked("--v-max", [&] { return units::parse_speed(v_max); });
    if (!(vlo > 0.0 && vhi >= vlo)) throw UsageError("--v-min/--v-max: need 0 < v-min <= v-max");
    if (n_speeds < 2) throw UsageError("--n-speeds: must be >= 2");
    opt::OptimizationResult res;
    if (objective == "capacity") {
      if (!p_hat) throw UsageError("--p-hat: required for the capacity objective");
      if (!(*p_hat > 0.0 && *p_hat < 0.5)) throw UsageError("--p-hat: must lie in (0, 0.5)");
      res = opt::maximize_capacity(vlo, vhi, *p_hat, road.road, road.l, road.sigma_o, n_speeds);
    } else {
      if (!s_hat) throw UsageError("--s-hat: required for the safety objective");
      const double s = checked("--s-hat", [&] { return units::parse_flow(*s_hat); });
      if (!(s > 0.0)) throw UsageError("--s-hat: must be positive");
      res = opt::minimize_collision(vlo, vhi, s, road.road, road.l, road.sigma_o, n_speeds);
    }
    Table t{{"v", "eta_dagger", "binding", "p", "s", "status"}, {}};
    for (const auto& c : res.curve) {
      t.rows.push_back({c.v, c.eta, opt::to_string(c.binding), c.p, c.s, opt::to_string(c.status)});
    }
    write_table(g.path(g.table_name("curve")), t, g.format);
    json j = {{"objective", objective},
              {"status", opt::to_string(res.status)},
              {"v_opt", res.v_opt},
              {"eta_opt", res.eta_opt},
              {"binding", opt::to_string(res.binding)},
              {"max_s", res.max_s},
              {"report", report_json(res.report)}};
    write_json_file(g.path("result.json"), j);
    std::cout << "status " << opt::to_string(res.status) << " v_opt " << io::fmt(res.v_opt)
              << " eta_opt " << io::fmt(res.eta_opt) << " binding " << opt::to_string(res.binding)
              << "\n";
    return kExitOk;
  }
};

// ---- validate -------------------------------------------------------------

struct ValidateCmd {
  RoadOpts road;
  std::string scenario = "baseline";
  long long runs = 20;
  std::string v = "50kmh";
  double eta = 1.5;
  bool events = false;
  bool comparison = false;
  double eta_min = 1.5, eta_max = 5.0;
  int eta_steps = 36;
  double horizon_sm = 1e7;

  void add(CLI::App* app) {
    road.add(app);
    app->add_option("--scenario", scenario, "baseline | overlap | two-lane | semi-markov")
        ->check(CLI::IsMember({"baseline", "overlap", "two-lane", "two_lane", "semi-markov"}));
    app->add_option("--runs", runs, "Monte Carlo runs");
    app->add_option("--v", v, "speed (kmh|ms suffix)");
    app->add_option("--eta", eta, "headway (s)");
    app->add_flag("--events", events, "write the per-run collision event log");
    app->add_flag("--comparison", comparison, "also write the analytic throughput comparison curve");
    app->add_option("--eta-min", eta_min, "comparison lowest headway (s)");
    app->add_option("--eta-max", eta_max, "comparison highest headway (s)");
    app->add_option("--eta-steps", eta_steps, "comparison headway points");
    app->add_option("--sm-horizon", horizon_sm, "semi-Markov horizon per run (s)");
  }

  int run(const Global& g) {
    road.resolve();
    const analytics::Policy pol{checked("--v", [&] { return units::parse_speed(v); }), eta};
    checked("--v/--eta", [&] { pol.validate(); return 0; });
    if (runs < 1) throw UsageError("--runs: must be >= 1");

    if (comparison) {
      if (!(eta_min > 0.0)) throw UsageError("--eta-min: must be positive");
      const auto rows = ext::comparison_curve(pol.v, grid(eta_min, eta_max, eta_steps, "--eta-steps"),
                                              road.road, road.l, road.sigma_o);
      Table t{{"eta", "s_baseline", "s_overlap", "s_two_lane", "flags"}, {}};
      for (const auto& r : rows) {
        std::string flags;
        auto add_flag = [&](bool on, const char* name) {
          if (!on) return;
          if (!flags.empty()) flags += '|';
          flags += name;
        };
        add_flag(r.report.out_of_regime, "out_of_regime");
        add_flag(r.report.baseline_floored, "baseline_floored");
        add_flag(r.report.overlap_floored, "overlap_floored");
        add_flag(r.report.two_lane_floored, "two_lane_floored");
        t.rows.push_back({r.eta, r.report.s_baseline, r.report.s_overlap, r.report.s_two_lane, flags});
      }
      write_table(g.path(g.table_name("comparison")), t, g.format);
    }

    json j;
    if (scenario == "semi-markov") {
      val::SemiMarkovConfig c;
      const auto rep = analytics::cic(pol, road.road, road.l, road.sigma_o);
      c.p_transition = std::min(1.0, rep.P);
      c.sojourn_normal = road.road.tau;
      c.sojourn_abnormal = rep.T;
      c.horizon = horizon_sm;
      c.s_plus = rep.s_plus;
      c.n_runs = runs;
      c.seed = g.seed;
      c.threads = static_cast<int>(g.workers());
      checked("semi-markov", [&] { c.validate(); return 0; });
      const auto est = val::run_semi_markov(c);
      j = {{"scenario", "semi-markov"},      {"analytic", rep.lambda},
           {"mc_mean", est.occupancy.mean},  {"mc_stderr", est.occupancy.std_error},
           {"n_runs", est.occupancy.n_runs},      {"p_transition_clamped", rep.P > 1.0},
           {"rel_gap", rep.lambda != 0.0 ? (est.occupancy.mean - rep.lambda) / rep.lambda : 0.0}};
    } else {
      const auto sc = val::parse_scenario(scenario == "two-lane" ? "two_lane" : scenario);
      val::ExtensionReport rep;
      try {
        rep = val::compare_extension(pol, road.road, road.l, road.sigma_o, sc, runs, g.seed,
                                     static_cast<int>(g.workers()));
      } catch (const st::OutOfRegime& e) {
        throw UsageError(std::string("--v/--eta/--sigma-o: ") + e.what());
      }
      j = {{"scenario", val::to_string(rep.scenario)},
           {"analytic", rep.analytic},
           {"mc_mean", rep.mc_mean},
           {"mc_stderr", rep.mc_stderr},
           {"n_runs", rep.n_runs},
           {"rel_gap", rep.rel_gap}};
      if (events) {
        auto os = open_out(g.path("events.csv"));
        val::write_event_log(os, rep.events);
      }
    }
    write_json_file(g.path("validation.json"), j);
    std::cout << j["scenario"].get<std::string>() << " analytic " << io::fmt(j["analytic"].get<double>())
              << " mc " << io::fmt(j["mc_mean"].get<double>()) << " +- "
              << io::fmt(j["mc_stderr"].get<double>()) << "\n";
    return kExitOk;
  }
};

// ---- ingest ---------------------------------------------------------------

struct IngestCmd {
  std::string in;
  std::string mode = "sample";
  ingest::FilterSpec spec;
  std::string v_lead_target = "20.2ms";
  std::string v_lead_tol = "0.2ms";
  std::string dv_max = "1ms";
  int min_samples = 10;
  int bins = 100;

  void add(CLI::App* app) {
    app->add_option("--in", in, "car-following CSV")->required()->check(CLI::ExistingFile);
    app->add_option("--mode", mode, "sample (drop violating samples) | case (drop whole case)")
        ->check(CLI::IsMember({"sample", "case"}));
    app->add_option("--v-lead-target", v_lead_target, "stable leader speed (kmh|ms suffix)");
    app->add_option("--v-lead-tol", v_lead_tol, "leader speed tolerance (kmh|ms suffix)");
    app->add_option("--dv-max", dv_max, "max |v_lead - v_follow| (kmh|ms suffix)");
    app->add_option("--min-samples", min_samples, "min samples per case after filtering");
    app->add_option("--bins", bins, "histogram bins");
  }

  int run(const Global& g) {
    spec.v_lead_target = checked("--v-lead-target", [&] { return units::parse_speed(v_lead_target); });
    spec.v_lead_tol = checked("--v-lead-tol", [&] { return units::parse_speed(v_lead_tol); });
    spec.dv_max = checked("--dv-max", [&] { return units::parse_speed(dv_max); });
    checked("filter", [&] { spec.validate(); return 0; });
    if (min_samples < 2) throw UsageError("--min-samples: must be >= 2");
    if (bins < 2) throw UsageError("--bins: must be >= 2");

    ingest::LoadResult loaded;
    try {
      loaded = ingest::load_records(in);
    } catch (const ingest::MissingColumn& e) {
      throw UsageError("--in: " + std::string(e.what()));
    }
    const auto fr = ingest::filter_stable(
        loaded.records, spec, mode == "case" ? ingest::FilterMode::DropCase : ingest::FilterMode::DropSample);
    const auto norm = ingest::normalize_gaps(fr.records, static_cast<std::size_t>(min_samples));
    const auto& s = fr.summary;
    json summary = {{"input_records", s.input_records},
                    {"retained_records", s.retained_records},
                    {"input_cases", s.input_cases},
                    {"retained_cases", s.retained_cases},
                    {"cases_rejected_on_load", loaded.rejected.size()},
                    {"cases_dropped_leader_speed", s.cases_dropped_leader_speed},
                    {"records_dropped_leader_speed", s.records_dropped_leader_speed},
                    {"cases_dropped_dv", s.cases_dropped_dv},
                    {"records_dropped_dv", s.records_dropped_dv},
                    {"cases_dropped_short", norm.dropped.size()},
                    {"cases_normalized", norm.cases_used.size()},
                    {"mode", mode}};
    write_json_file(g.path("filter_summary.json"), summary);
    std::cout << "retained " << s.retained_records << "/" << s.input_records << " records, "
              << norm.cases_used.size() << "/" << s.input_cases << " cases\n";
    if (norm.samples.size() < 2) {
      std::cerr << "error: too few normalized samples for a fit\n";
      return kExitRuntime;
    }
    const auto rep = stats::gaussian_fit_report(norm.samples, static_cast<std::size_t>(bins));
    write_table(g.path(g.table_name("histogram")), histogram_table(rep), g.format);
    write_json_file(g.path("fit.json"), fit_json(rep));
    std::cout << "nrmse " << io::fmt(rep.nrmse) << " mu " << io::fmt(rep.fit.mu) << " var "
              << io::fmt(rep.fit.var) << "\n";
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic car-following and collision-inclusive capacity toolkit"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "base random seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "table format: csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");

  SimulateCmd simulate;
  Table1Cmd table1;
  SweepCmd sweep;
  CapacityCmd capacity;
  OptimizeCmd optimize;
  ValidateCmd validate;
  IngestCmd ing;
  std::vector<std::pair<CLI::App*, std::function<int(const Global&)>>> cmds;
  auto reg = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add(sub);
    cmds.emplace_back(sub, [&cmd](const Global& gl) { return cmd.run(gl); });
  };
  reg("simulate", "simulate a leader-follower pair or string and fit the gap distribution", simulate);
  reg("table1", "gap Gaussian-fit error over the noise grid", table1);
  reg("sweep-variance", "gap variance over a (speed, headway) grid and scaling-law fits", sweep);
  reg("capacity", "collision-inclusive capacity report or surface", capacity);
  reg("optimize", "constrained speed/headway optimization", optimize);
  reg("validate", "Monte Carlo validation of the closed forms", validate);
  reg("ingest", "filter and normalize car-following records, then fit", ing);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    for (auto& [sub, fn] : cmds) {
      if (sub->parsed()) return fn(g);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sim::StepError& e) {
    std::cerr << "error: " << e.what() << " (step " << e.step << ", vehicle " << e.vehicle << ")\n";
    return kExitRuntime;
  } catch (const sim::CollisionError& e) {
    std::cerr << "error: " << e.what() << " (vehicle " << e.vehicle << ", t " << io::fmt(e.t) << ")\n";
    return kExitRuntime;
  } catch (const ingest::ParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line << ")\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

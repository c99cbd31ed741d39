#include "avcap/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "avcap/parallel.hpp"

namespace avcap::sim {

namespace {

constexpr double kMinObservedGap = 0.01;
constexpr int kGapRedraws = 8;

}  // namespace

void VehicleSpec::validate() const {
  if (!(a > 0) || !(b > 0) || !(v0 > 0) || !(xi >= 1) || !(d0 >= 0) || !(h0 > 0) || !(l > 0)) {
    throw std::invalid_argument("VehicleSpec: need a,b,v0,h0,l > 0, xi >= 1, d0 >= 0");
  }
}

void NoiseSpec::validate() const {
  if (!(sigma_d >= 0) || !(sigma_dv >= 0) || !(sigma_acc >= 0) || !(sigma_o >= 0)) {
    throw std::invalid_argument("NoiseSpec: standard deviations must be >= 0");
  }
}

double idm_accel(const VehicleSpec& veh, double v_e, double d_obs, double dv_obs) {
  const double d_star = veh.d0 + v_e * veh.h0 + v_e * dv_obs / (2.0 * std::sqrt(veh.a * veh.b));
  const double ratio = d_star / d_obs;
  return veh.a * (1.0 - std::pow(v_e / veh.v0, veh.xi) - ratio * ratio);
}

StepResult step_idm(const SimState& s, const VehicleSpec& veh, double dt, const Draws& draws,
                    std::size_t step_index) {
  const double gap = s.x_lead - s.x_e;
  const double d_obs = gap + draws.eps_d;
  if (!(d_obs > 0.0) || !std::isfinite(d_obs)) {
    throw StepError("observed gap " + std::to_string(d_obs) + " m at step " +
                        std::to_string(step_index),
                    step_index);
  }
  const double dv_obs = (s.v_e - s.v_lead) + draws.eps_dv;
  const double accel = idm_accel(veh, s.v_e, d_obs, dv_obs) + draws.eps_acc;
  if (!std::isfinite(accel)) {
    throw StepError("non-finite acceleration at step " + std::to_string(step_index), step_index);
  }
  StepResult r;
  r.accel = accel;
  double v_new = s.v_e + accel * dt;
  if (v_new < 0.0) {
    v_new = 0.0;
    r.clamped = true;
  }
  r.state = s;
  r.state.v_e = v_new;
  r.state.x_e = s.x_e + v_new * dt;
  r.state.x_lead = s.x_lead + s.v_lead * dt;
  r.state.t = s.t + dt;
  return r;
}

namespace {

struct NoiseSource {
  const NoiseSpec& noise;
  Rng& rng;
  std::normal_distribution<double> std_normal{0.0, 1.0};

  // Draws the three channels; eps_d is redrawn while gap + eps_d is too small.
  Draws draw(double gap, std::size_t step_index, std::size_t vehicle) {
    Draws d;
    d.eps_d = noise.sigma_d * std_normal(rng);
    int tries = 0;
    while (gap + d.eps_d <= kMinObservedGap) {
      if (++tries > kGapRedraws) {
        throw StepError("observed gap stayed <= 0.01 m after 8 redraws at step " +
                            std::to_string(step_index),
                        step_index, vehicle);
      }
      d.eps_d = noise.sigma_d * std_normal(rng);
    }
    d.eps_dv = noise.sigma_dv * std_normal(rng);
    d.eps_acc = noise.sigma_acc * std_normal(rng);
    return d;
  }
};

std::size_t step_count(double duration, double dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
  if (!(duration >= 100.0 * dt) || !std::isfinite(duration)) {
    throw std::invalid_argument("duration must be >= 100*dt");
  }
  return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

StepResult step_idm(const SimState& s, const VehicleSpec& veh, const NoiseSpec& noise, double dt,
                    Rng& rng, std::size_t step_index) {
  NoiseSource src{noise, rng};
  return step_idm(s, veh, dt, src.draw(s.x_lead - s.x_e, step_index, 1), step_index);
}

double equilibrium_gap(const VehicleSpec& veh, double v) {
  if (!(v >= 0.0) || !(v < veh.v0)) {
    throw std::domain_error("equilibrium_gap: need 0 <= v < v0");
  }
  return (veh.d0 + veh.h0 * v) / std::sqrt(1.0 - std::pow(v / veh.v0, veh.xi));
}

std::span<const double> post_warmup(const std::vector<double>& xs, const WarmupSpec& w) {
  const auto n = xs.size();
  auto skip = static_cast<std::size_t>(std::ceil(w.fraction * static_cast<double>(n)));
  skip = std::max(skip, w.min_steps);
  if (skip + 2 > n) throw std::invalid_argument("post_warmup: fewer than 2 samples remain");
  return std::span<const double>(xs).subspan(skip);
}

Trajectory simulate_pair(const VehicleSpec& veh, const NoiseSpec& noise, double v_lead,
                         double duration, double dt, std::uint64_t seed) {
  auto out = simulate_string(veh, noise, 1, v_lead, duration, dt, seed);
  return std::move(out.front());
}

std::vector<Trajectory> simulate_string(const VehicleSpec& veh, const NoiseSpec& noise,
                                        std::size_t n_followers, double v_lead, double duration,
                                        double dt, std::uint64_t seed) {
  veh.validate();
  noise.validate();
  if (n_followers < 1) throw std::invalid_argument("n_followers must be >= 1");
  const std::size_t n_steps = step_count(duration, dt);
  const double gap0 = equilibrium_gap(veh, v_lead);

  // x[0] is the leader; followers start at equilibrium spacing behind it.
  std::vector<double> x(n_followers + 1), v(n_followers + 1, v_lead);
  x[0] = gap0 * static_cast<double>(n_followers);
  for (std::size_t i = 1; i <= n_followers; ++i) x[i] = x[i - 1] - gap0;

  std::vector<Trajectory> traj(n_followers);
  for (auto& tr : traj) {
    tr.dt = dt;
    tr.seed = seed;
    tr.t.reserve(n_steps);
    tr.gap.reserve(n_steps);
    tr.v_e.reserve(n_steps);
    tr.accel.reserve(n_steps);
  }

  Rng rng(seed);
  NoiseSource src{noise, rng};
  std::vector<double> accel(n_followers + 1, 0.0);
  const bool is_string = n_followers > 1;

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    for (std::size_t i = 1; i <= n_followers; ++i) {
      const double gap = x[i - 1] - x[i];
      if (is_string && gap <= veh.l) {
        throw CollisionError("collision behind vehicle " + std::to_string(i - 1) + " at t=" +
                                 std::to_string(t),
                             i, t);
      }
      const Draws d = src.draw(gap, k, i);
      const double d_obs = gap + d.eps_d;
      const double dv_obs = (v[i] - v[i - 1]) + d.eps_dv;
      const double acc = idm_accel(veh, v[i], d_obs, dv_obs) + d.eps_acc;
      if (!std::isfinite(acc)) {
        throw StepError("non-finite acceleration at step " + std::to_string(k), k, i);
      }
      accel[i] = acc;
      auto& tr = traj[i - 1];
      tr.t.push_back(t);
      tr.gap.push_back(gap);
      tr.v_e.push_back(v[i]);
      tr.accel.push_back(acc);
    }
    // Synchronous update: every follower reacted to the start-of-step state.
    x[0] += v[0] * dt;
    for (std::size_t i = 1; i <= n_followers; ++i) {
      double vn = v[i] + accel[i] * dt;
      if (vn < 0.0) {
        vn = 0.0;
        ++traj[i - 1].clamp_count;
      }
      v[i] = vn;
      x[i] += vn * dt;
    }
  }
  return traj;
}

std::vector<SweepRow> variance_sweep(const VehicleSpec& veh, const NoiseSpec& noise,
                                     const std::vector<double>& v_grid,
                                     const std::vector<double>& eta_grid, double duration,
                                     double dt, std::uint64_t seed, std::size_t replicates,
                                     unsigned threads) {
  if (v_grid.empty() || eta_grid.empty() || replicates == 0) {
    throw std::invalid_argument("variance_sweep: empty grid");
  }
  const std::size_t n_cells = v_grid.size() * eta_grid.size();
  std::vector<SweepRow> rows(n_cells * replicates);
  parallel_for(rows.size(), threads, [&](std::size_t idx) {
    const std::size_t cell = idx / replicates;
    const std::size_t rep = idx % replicates;
    SweepRow& row = rows[idx];
    row.v = v_grid[cell / eta_grid.size()];
    row.eta = eta_grid[cell % eta_grid.size()];
    row.seed = derive_seed(seed, {cell, rep});
    VehicleSpec cell_veh = veh;
    cell_veh.h0 = row.eta;
    cell_veh.d0 = 0.0;
    try {
      const Trajectory tr = simulate_pair(cell_veh, noise, row.v, duration, dt, row.seed);
      const auto xs = post_warmup(tr.gap);
      double mean = 0.0;
      for (double g : xs) mean += g;
      mean /= static_cast<double>(xs.size());
      double ss = 0.0;
      for (double g : xs) ss += (g - mean) * (g - mean);
      row.var_gap = ss / static_cast<double>(xs.size() - 1);
      row.collided = *std::min_element(tr.gap.begin(), tr.gap.end()) <= cell_veh.l;
    } catch (const StepError&) {
      row.failed = true;
      row.collided = true;
      row.var_gap = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return rows;
}

std::string to_string(ScalingForm f) {
  switch (f) {
    case ScalingForm::VEta: return "v*eta";
    case ScalingForm::VEta2: return "v*eta^2";
    case ScalingForm::VEta3: return "v*eta^3";
    case ScalingForm::V2Eta: return "v^2*eta";
    case ScalingForm::V2Eta2: return "v^2*eta^2";
    case ScalingForm::V3Eta: return "v^3*eta";
    case ScalingForm::ExpVEta: return "exp(v*eta)";
    case ScalingForm::ExpVEta2: return "exp(v*eta^2)";
    case ScalingForm::ExpV2Eta: return "exp(v^2*eta)";
  }
  return "?";
}

namespace {

double exponent_arg(ScalingForm f, double v, double eta) {
  switch (f) {
    case ScalingForm::ExpVEta: return v * eta;
    case ScalingForm::ExpVEta2: return v * eta * eta;
    case ScalingForm::ExpV2Eta: return v * v * eta;
    default: return 0.0;
  }
}

bool is_exponential(ScalingForm f) {
  return f == ScalingForm::ExpVEta || f == ScalingForm::ExpVEta2 || f == ScalingForm::ExpV2Eta;
}

double polynomial(ScalingForm f, double v, double eta) {
  switch (f) {
    case ScalingForm::VEta: return v * eta;
    case ScalingForm::VEta2: return v * eta * eta;
    case ScalingForm::VEta3: return v * eta * eta * eta;
    case ScalingForm::V2Eta: return v * v * eta;
    case ScalingForm::V2Eta2: return v * v * eta * eta;
    case ScalingForm::V3Eta: return v * v * v * eta;
    default: return 0.0;
  }
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted) {
  const double sst = (y.array() - y.mean()).square().sum();
  const double sse = (y - fitted).squaredNorm();
  return sst > 0.0 ? 1.0 - sse / sst : 0.0;
}

}  // namespace

std::vector<ScalingFit> fit_scaling_forms(const std::vector<SweepRow>& rows) {
  std::vector<const SweepRow*> ok;
  for (const auto& r : rows) {
    if (!r.collided && !r.failed && std::isfinite(r.var_gap)) ok.push_back(&r);
  }
  if (ok.size() < 3) throw std::invalid_argument("fit_scaling_forms: fewer than 3 usable rows");
  const auto n = static_cast<Eigen::Index>(ok.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = ok[i]->var_gap;

  std::vector<ScalingFit> out;
  for (ScalingForm f : kAllScalingForms) {
    Eigen::VectorXd x(n);
    if (is_exponential(f)) {
      // exp(arg - max) keeps every value finite; a linear fit is invariant to
      // rescaling the regressor, so the R^2 equals that of exp(arg).
      double amax = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) amax = std::max(amax, exponent_arg(f, ok[i]->v, ok[i]->eta));
      for (Eigen::Index i = 0; i < n; ++i) x(i) = std::exp(exponent_arg(f, ok[i]->v, ok[i]->eta) - amax);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) x(i) = polynomial(f, ok[i]->v, ok[i]->eta);
    }
    ScalingFit fit{f};
    Eigen::MatrixXd A(n, 2);
    A.col(0) = x;
    A.col(1).setOnes();
    const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(y);
    fit.slope_with_intercept = beta(0);
    fit.intercept = beta(1);
    fit.r2_with_intercept = r_squared(y, A * beta);
    const double xx = x.squaredNorm();
    fit.slope_no_intercept = xx > 0.0 ? x.dot(y) / xx : 0.0;
    fit.r2_no_intercept = r_squared(y, fit.slope_no_intercept * x);
    out.push_back(fit);
  }
  return out;
}

}  // namespace avcap::sim

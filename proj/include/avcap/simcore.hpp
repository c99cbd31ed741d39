#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "avcap/rng.hpp"

namespace avcap::sim {

struct VehicleSpec {
  double a = 2.0;
  double b = 2.0;
  double v0 = 120.0 / 3.6;
  double xi = 4.0;
  double d0 = 0.0;
  double h0 = 1.5;
  double l = 5.0;

  void validate() const;
};

struct NoiseSpec {
  double sigma_d = 1.0;
  double sigma_dv = 1.0;
  double sigma_acc = 1.0;
  double sigma_o = 0.05;

  void validate() const;
};

struct SimState {
  double x_e = 0.0;
  double v_e = 0.0;
  double x_lead = 0.0;
  double v_lead = 0.0;
  double t = 0.0;
};

/// Raw error draws for one step (already scaled to their standard deviations).
struct Draws {
  double eps_d = 0.0;
  double eps_dv = 0.0;
  double eps_acc = 0.0;
};

struct StepResult {
  SimState state;
  double accel = 0.0;
  bool clamped = false;
};

/// Non-finite or non-positive observed gap. step = index of the failing step,
/// vehicle = follower index within a string (1 for a pair).
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, std::size_t step, std::size_t vehicle = 1)
      : std::runtime_error(what), step(step), vehicle(vehicle) {}
  std::size_t step;
  std::size_t vehicle;
};

/// Gap fell to the vehicle length inside a string.
class CollisionError : public std::runtime_error {
 public:
  CollisionError(const std::string& what, std::size_t vehicle, double t)
      : std::runtime_error(what), vehicle(vehicle), t(t) {}
  std::size_t vehicle;
  double t;
};

/// IDM acceleration for observed gap d_obs and observed closing speed dv_obs.
double idm_accel(const VehicleSpec& veh, double v_e, double d_obs, double dv_obs);

/// Deterministic step with explicit draws. Leader moves at constant speed.
StepResult step_idm(const SimState& s, const VehicleSpec& veh, double dt, const Draws& draws,
                    std::size_t step_index = 0);

/// Stochastic step; redraws eps_d up to 8 times while the observed gap is <= 0.01 m.
StepResult step_idm(const SimState& s, const VehicleSpec& veh, const NoiseSpec& noise, double dt,
                    Rng& rng, std::size_t step_index = 0);

double equilibrium_gap(const VehicleSpec& veh, double v);

struct Trajectory {
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> t;
  std::vector<double> gap;
  std::vector<double> v_e;
  std::vector<double> accel;
  std::size_t clamp_count = 0;

  std::size_t size() const { return t.size(); }
};

struct WarmupSpec {
  double fraction = 0.1;
  std::size_t min_steps = 100;
};

/// Samples after the warm-up window.
std::span<const double> post_warmup(const std::vector<double>& xs, const WarmupSpec& w = {});

Trajectory simulate_pair(const VehicleSpec& veh, const NoiseSpec& noise, double v_lead,
                         double duration, double dt, std::uint64_t seed);

/// Follower i (1-based) tracks follower i-1; index 0 is the constant-speed leader.
/// Returns one Trajectory per follower, gap measured to its own predecessor.
std::vector<Trajectory> simulate_string(const VehicleSpec& veh, const NoiseSpec& noise,
                                        std::size_t n_followers, double v_lead, double duration,
                                        double dt, std::uint64_t seed);

struct SweepRow {
  double v = 0.0;
  double eta = 0.0;
  double var_gap = 0.0;
  bool collided = false;
  bool failed = false;  // step error; var_gap is NaN
  std::uint64_t seed = 0;
};

/// One row per (v, eta, replicate). Each cell runs with h0 = eta, d0 = 0.
std::vector<SweepRow> variance_sweep(const VehicleSpec& veh, const NoiseSpec& noise,
                                     const std::vector<double>& v_grid,
                                     const std::vector<double>& eta_grid, double duration,
                                     double dt, std::uint64_t seed, std::size_t replicates = 1,
                                     unsigned threads = 1);

/// Candidate regressors for sigma_x^2 against (v, eta) in SI units.
enum class ScalingForm {
  VEta,
  VEta2,
  VEta3,
  V2Eta,
  V2Eta2,
  V3Eta,
  ExpVEta,
  ExpVEta2,
  ExpV2Eta
};

inline constexpr ScalingForm kAllScalingForms[] = {
    ScalingForm::VEta,   ScalingForm::VEta2,   ScalingForm::VEta3,
    ScalingForm::V2Eta,  ScalingForm::V2Eta2,  ScalingForm::V3Eta,
    ScalingForm::ExpVEta, ScalingForm::ExpVEta2, ScalingForm::ExpV2Eta};

std::string to_string(ScalingForm f);

struct ScalingFit {
  ScalingForm form;
  double slope_with_intercept = 0.0;
  double intercept = 0.0;
  double r2_with_intercept = 0.0;
  double slope_no_intercept = 0.0;
  double r2_no_intercept = 0.0;
};

/// Least-squares fits of var_gap on each form, skipping collided or failed rows.
/// R^2 is 1 - SSE/SST with SST centred on the mean for both variants.
std::vector<ScalingFit> fit_scaling_forms(const std::vector<SweepRow>& rows);

}  // namespace avcap::sim

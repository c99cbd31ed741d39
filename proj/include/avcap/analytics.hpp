#pragma once

#include <stdexcept>
#include <vector>

namespace avcap::analytics {

struct Policy {
  double v = 0.0;    // m/s
  double eta = 0.0;  // s

  void validate() const;
};

struct TctModel {
  enum class Kind { Linear, Fixed };
  Kind kind = Kind::Linear;
  double fixed_seconds = 2700.0;
  // Linear: t_min at v = 0 rising to t_max at v_ref, clamped to [t_min, t_max].
  double t_min = 1800.0;
  double t_max = 3600.0;
  double v_ref = 120.0 / 3.6;

  static TctModel linear() { return {}; }
  static TctModel fixed(double seconds) {
    TctModel m;
    m.kind = Kind::Fixed;
    m.fixed_seconds = seconds;
    return m;
  }
};

struct RoadConfig {
  double L = 5000.0;
  double tau = 0.1;
  TctModel tct;
  int n_lanes = 1;
  double D = 20.0;
  double H = 3600.0;

  void validate() const;
};

struct TrafficState {
  double q = 0.0;    // veh/s
  double rho = 0.0;  // veh/m
};

struct CapacityReport {
  double p = 0.0;
  double log10_p = 0.0;
  double P = 0.0;
  double s_plus = 0.0;
  double lambda = 0.0;
  double s = 0.0;
  double c = 0.0;  // signed; negative = upstream
  double T = 0.0;
};

/// z = (l - v eta) / (v sigma_o sqrt(eta)).
double z_score(const Policy& pol, double l, double sigma_o);
double dz_deta(const Policy& pol, double l, double sigma_o);
double dz_dv(const Policy& pol, double l, double sigma_o);

/// Phi(z). sigma_o == 0 gives the step limit (0, 1/2 or 1).
double collision_probability(const Policy& pol, double l, double sigma_o);
/// Natural log of collision_probability; finite far below double underflow.
double log_collision_probability(const Policy& pol, double l, double sigma_o);
double log10_collision_probability(const Policy& pol, double l, double sigma_o);

/// dp/deta = phi(z) dz/deta (negative).
double dp_deta(const Policy& pol, double l, double sigma_o);
/// log |dp/deta|.
double log_abs_dp_deta(const Policy& pol, double l, double sigma_o);

/// L / (v eta): expected vehicles on the segment.
double vehicle_count(const Policy& pol, const RoadConfig& road);
double collision_rate(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

double full_capacity(double eta);

double shockwave_speed(const TrafficState& normal, const TrafficState& blocked);
/// Wave between free flow (1/eta, 1/(v eta)) and a jam (0, 1/l). Negative when v eta > l.
double jam_wave_speed(const Policy& pol, double l);

double clearance_time(const RoadConfig& road, double v);

/// lambda = T P / (T P + tau), clamped to [0, 1].
double abnormal_weight_from_rate(double P, double T, double tau);
double abnormal_weight(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

/// 1 / (eta + (T L / (tau v)) p).
double cic_value(const Policy& pol, const RoadConfig& road, double l, double sigma_o);
CapacityReport cic(const Policy& pol, const RoadConfig& road, double l, double sigma_o);

struct OccupancyPair {
  double lambda = 0.0;
  double s = 0.0;
};

/// Solves lambda = (s/s+)(T/tau)P with s = (1-lambda)s+ + lambda s- by root finding.
OccupancyPair solve_occupancy_pair(double s_plus, double s_minus, double T, double tau, double P);

struct SurfaceCell {
  double v = 0.0;
  double eta = 0.0;
  CapacityReport report;
};

/// Row-major over v then eta.
std::vector<SurfaceCell> cic_surface(const std::vector<double>& v_grid,
                                     const std::vector<double>& eta_grid, const RoadConfig& road,
                                     double l, double sigma_o);

}  // namespace avcap::analytics

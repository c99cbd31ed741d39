#include "avcap/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avcap/normal.hpp"
#include "avcap/numerics.hpp"

namespace avcap::analytics {

namespace {

constexpr double kLn10 = 2.30258509299404568402;

void check_inputs(const Policy& pol, double l, double sigma_o) {
  pol.validate();
  if (!(l > 0.0)) throw std::invalid_argument("vehicle length l must be > 0");
  if (!(sigma_o >= 0.0)) throw std::invalid_argument("sigma_o must be >= 0");
}

}  // namespace

void Policy::validate() const {
  if (!(v > 0.0) || !(eta > 0.0) || !std::isfinite(v) || !std::isfinite(eta)) {
    throw std::invalid_argument("policy needs v > 0 and eta > 0");
  }
}

void RoadConfig::validate() const {
  if (!(L > 0.0) || !(tau > 0.0) || n_lanes < 1 || !(D >= 0.0) || !(H > 0.0)) {
    throw std::invalid_argument("road config needs L, tau, H > 0, n_lanes >= 1, D >= 0");
  }
  if (tct.kind == TctModel::Kind::Fixed && !(tct.fixed_seconds > 0.0)) {
    throw std::invalid_argument("fixed clearance time must be > 0");
  }
  if (tct.kind == TctModel::Kind::Linear &&
      (!(tct.t_min > 0.0) || !(tct.t_max >= tct.t_min) || !(tct.v_ref > 0.0))) {
    throw std::invalid_argument("linear clearance time needs 0 < t_min <= t_max, v_ref > 0");
  }
}

double z_score(const Policy& pol, double l, double sigma_o) {
  return (l - pol.v * pol.eta) / (pol.v * sigma_o * std::sqrt(pol.eta));
}

double dz_deta(const Policy& pol, double l, double sigma_o) {
  return -(l + pol.v * pol.eta) / (2.0 * pol.v * sigma_o * pol.eta * std::sqrt(pol.eta));
}

double dz_dv(const Policy& pol, double l, double sigma_o) {
  return -l / (pol.v * pol.v * sigma_o * std::sqrt(pol.eta));
}

double log_collision_probability(const Policy& pol, double l, double sigma_o) {
  check_inputs(pol, l, sigma_o);
  if (sigma_o == 0.0) {
    const double m = pol.v * pol.eta;
    if (m > l) return -std::numeric_limits<double>::infinity();
    return m < l ? 0.0 : std::log(0.5);
  }
  return normal::log_cdf(z_score(pol, l, sigma_o));
}

double collision_probability(const Policy& pol, double l, double sigma_o) {
  check_inputs(pol, l, sigma_o);
  if (sigma_o == 0.0) {
    const double m = pol.v * pol.eta;
    return m > l ? 0.0 : (m < l ? 1.0 : 0.5);
  }
  return normal::cdf(z_score(pol, l, sigma_o));
}

double log10_collision_probability(const Policy& pol, double l, double sigma_o) {
  return log_collision_probability(pol, l, sigma_o) / kLn10;
}

double dp_deta(const Policy& pol, double l, double sigma_o) {
  check_inputs(pol, l, sigma_o);
  if (sigma_o == 0.0) return 0.0;
  return normal::pdf(z_score(pol, l, sigma_o)) * dz_deta(pol, l, sigma_o);
}

double log_abs_dp_deta(const Policy& pol, double l, double sigma_o) {
  check_inputs(pol, l, sigma_o);
  if (sigma_o == 0.0) return -std::numeric_limits<double>::infinity();
  return normal::log_pdf(z_score(pol, l, sigma_o)) + std::log(-dz_deta(pol, l, sigma_o));
}

double vehicle_count(const Policy& pol, const RoadConfig& road) {
  return road.L / (pol.v * pol.eta);
}

double collision_rate(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  return vehicle_count(pol, road) * collision_probability(pol, l, sigma_o);
}

double full_capacity(double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  return 1.0 / eta;
}

double shockwave_speed(const TrafficState& normal, const TrafficState& blocked) {
  if (normal.rho == blocked.rho) throw std::domain_error("shockwave_speed: equal densities");
  return (normal.q - blocked.q) / (normal.rho - blocked.rho);
}

double jam_wave_speed(const Policy& pol, double l) {
  return shockwave_speed({1.0 / pol.eta, 1.0 / (pol.v * pol.eta)}, {0.0, 1.0 / l});
}

double clearance_time(const RoadConfig& road, double v) {
  if (!(v >= 0.0)) throw std::invalid_argument("clearance_time: v must be >= 0");
  const auto& m = road.tct;
  if (m.kind == TctModel::Kind::Fixed) return m.fixed_seconds;
  const double t = m.t_min + (m.t_max - m.t_min) * (v / m.v_ref);
  return std::clamp(t, m.t_min, m.t_max);
}

double abnormal_weight_from_rate(double P, double T, double tau) {
  if (!(P >= 0.0)) throw std::invalid_argument("collision rate must be >= 0");
  if (P == 0.0) return 0.0;
  if (std::isinf(P)) return 1.0;
  return std::clamp(T * P / (T * P + tau), 0.0, 1.0);
}

double abnormal_weight(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  return abnormal_weight_from_rate(collision_rate(pol, road, l, sigma_o),
                                   clearance_time(road, pol.v), road.tau);
}

double cic_value(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  const double T = clearance_time(road, pol.v);
  const double p = collision_probability(pol, l, sigma_o);
  return 1.0 / (pol.eta + (T * road.L / (road.tau * pol.v)) * p);
}

CapacityReport cic(const Policy& pol, const RoadConfig& road, double l, double sigma_o) {
  road.validate();
  CapacityReport r;
  r.T = clearance_time(road, pol.v);
  r.p = collision_probability(pol, l, sigma_o);
  r.log10_p = log10_collision_probability(pol, l, sigma_o);
  r.P = vehicle_count(pol, road) * r.p;
  r.s_plus = full_capacity(pol.eta);
  r.lambda = abnormal_weight_from_rate(r.P, r.T, road.tau);
  r.s = 1.0 / (pol.eta + (r.T * road.L / (road.tau * pol.v)) * r.p);
  r.c = (pol.v * pol.eta == l) ? -std::numeric_limits<double>::infinity() : jam_wave_speed(pol, l);
  return r;
}

OccupancyPair solve_occupancy_pair(double s_plus, double s_minus, double T, double tau, double P) {
  // Substituting s into the lambda equation leaves g(lambda) = 0 on [0, 1].
  auto s_of = [&](double lam) { return (1.0 - lam) * s_plus + lam * s_minus; };
  auto g = [&](double lam) { return lam - (s_of(lam) / s_plus) * (T / tau) * P; };
  OccupancyPair out;
  if (P == 0.0) {
    out.lambda = 0.0;
  } else {
    out.lambda = numerics::brent(g, 0.0, 1.0, 1e-15).x;
  }
  out.s = s_of(out.lambda);
  return out;
}

std::vector<SurfaceCell> cic_surface(const std::vector<double>& v_grid,
                                     const std::vector<double>& eta_grid, const RoadConfig& road,
                                     double l, double sigma_o) {
  if (v_grid.empty() || eta_grid.empty()) throw std::invalid_argument("cic_surface: empty grid");
  std::vector<SurfaceCell> out;
  out.reserve(v_grid.size() * eta_grid.size());
  for (double v : v_grid) {
    for (double eta : eta_grid) out.push_back({v, eta, cic({v, eta}, road, l, sigma_o)});
  }
  return out;
}

}  // namespace avcap::analytics

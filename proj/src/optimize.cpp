#include "avcap/optimize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "avcap/normal.hpp"
#include "avcap/numerics.hpp"

namespace avcap::opt {

namespace {

void check(double v, double l, double sigma_o) {
  if (!(v > 0.0) || !(l > 0.0) || !(sigma_o > 0.0)) {
    throw std::invalid_argument("optimize: need v, l, sigma_o > 0");
  }
}

double penalty(double v, const RoadConfig& road) {
  return analytics::clearance_time(road, v) * road.L / (v * road.tau);
}

// log(K |dp/deta|); positive where 1/s is decreasing in eta.
double stationarity(double v, double eta, double log_k, double l, double sigma_o) {
  return log_k + analytics::log_abs_dp_deta({v, eta}, l, sigma_o);
}

std::vector<double> log_grid(const SearchGrid& g) {
  if (!(g.eta_min > 0.0) || !(g.eta_max > g.eta_min) || g.points < 3) {
    throw std::invalid_argument("SearchGrid: need 0 < eta_min < eta_max, points >= 3");
  }
  auto xs = numerics::linspace(std::log(g.eta_min), std::log(g.eta_max),
                               static_cast<std::size_t>(g.points));
  for (double& x : xs) x = std::exp(x);
  xs.front() = g.eta_min;
  xs.back() = g.eta_max;
  return xs;
}

}  // namespace

std::string to_string(Binding b) {
  switch (b) {
    case Binding::ConstraintBinding: return "constraint-binding";
    case Binding::InteriorStationary: return "interior-stationary";
    case Binding::CapacityRoot: return "capacity-root";
  }
  return "?";
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Ok: return "ok";
    case Status::Infeasible: return "infeasible";
    case Status::Capped: return "capped";
  }
  return "?";
}

double eta_hat_log(double v, double log_p_hat, double l, double sigma_o) {
  check(v, l, sigma_o);
  if (!(log_p_hat < 0.0)) throw std::invalid_argument("eta_hat: p_hat must be in (0, 1)");
  const double z = normal::quantile_from_log(log_p_hat);
  // v u^2 + z v sigma u - l = 0 with u = sqrt(eta); the discriminant exceeds (z v sigma)^2.
  const double b = z * v * sigma_o;
  const double disc = std::sqrt(b * b + 4.0 * v * l);
  const double u = (b <= 0.0) ? (-b + disc) / (2.0 * v) : (2.0 * l) / (b + disc);
  double eta = u * u;
  // Newton polish on log p; the closed form is already within a few ulps of z.
  for (int it = 0; it < 3; ++it) {
    const Policy pol{v, eta};
    const double zz = analytics::z_score(pol, l, sigma_o);
    const double lp = normal::log_cdf(zz);
    const double dlp = std::exp(normal::log_pdf(zz) - lp) * analytics::dz_deta(pol, l, sigma_o);
    if (!(dlp < 0.0) || !std::isfinite(dlp)) break;
    const double step = (lp - log_p_hat) / dlp;
    if (!std::isfinite(step) || std::abs(step) > 0.5 * eta) break;
    eta -= step;
    if (std::abs(step) <= 1e-16 * eta) break;
  }
  return eta;
}

double eta_hat(double v, double p_hat, double l, double sigma_o) {
  if (!(p_hat > 0.0) || !(p_hat < 1.0)) throw std::invalid_argument("eta_hat: p_hat must be in (0, 1)");
  return eta_hat_log(v, std::log(p_hat), l, sigma_o);
}

std::optional<double> eta_star(double v, const RoadConfig& road, double l, double sigma_o,
                               const SearchGrid& grid) {
  check(v, l, sigma_o);
  const double log_k = std::log(penalty(v, road));
  const auto etas = log_grid(grid);
  auto h = [&](double eta) { return stationarity(v, eta, log_k, l, sigma_o); };
  // Scan from the top for the last + to - crossing (a minimum of 1/s).
  double h_hi = h(etas.back());
  for (std::size_t i = etas.size() - 1; i-- > 0;) {
    const double h_lo = h(etas[i]);
    if (h_lo > 0.0 && h_hi <= 0.0) {
      if (h_hi == 0.0) return etas[i + 1];
      return numerics::brent(h, etas[i], etas[i + 1], 1e-13).x;
    }
    h_hi = h_lo;
  }
  return std::nullopt;
}

HeadwayChoice optimal_headway_capacity(double v, double p_hat, const RoadConfig& road, double l,
                                       double sigma_o, const SearchGrid& grid) {
  HeadwayChoice c;
  c.eta_hat = eta_hat(v, p_hat, l, sigma_o);
  c.eta_star = eta_star(v, road, l, sigma_o, grid);
  if (c.eta_star && *c.eta_star > c.eta_hat) {
    c.eta = *c.eta_star;
    c.binding = Binding::InteriorStationary;
  } else {
    c.eta = c.eta_hat;
    c.binding = Binding::ConstraintBinding;
  }
  return c;
}

OptimizationResult maximize_capacity(double v_min, double v_max, double p_hat,
                                     const RoadConfig& road, double l, double sigma_o,
                                     int n_speeds, const SearchGrid& grid) {
  road.validate();
  if (!(v_min > 0.0) || !(v_max >= v_min) || n_speeds < 1) {
    throw std::invalid_argument("maximize_capacity: need 0 < v_min <= v_max");
  }
  OptimizationResult r;
  const auto vs = n_speeds == 1 ? std::vector<double>{v_max}
                                : numerics::linspace(v_min, v_max, static_cast<std::size_t>(n_speeds));
  for (double v : vs) {
    const auto c = optimal_headway_capacity(v, p_hat, road, l, sigma_o, grid);
    const auto rep = analytics::cic({v, c.eta}, road, l, sigma_o);
    r.curve.push_back({v, c.eta, c.binding, Status::Ok, rep.p, rep.s});
  }
  const auto c = optimal_headway_capacity(v_max, p_hat, road, l, sigma_o, grid);
  r.v_opt = v_max;
  r.eta_opt = c.eta;
  r.binding = c.binding;
  r.report = analytics::cic({v_max, c.eta}, road, l, sigma_o);
  r.max_s = r.report.s;
  return r;
}

double argmax_s(double v, const RoadConfig& road, double l, double sigma_o, const SearchGrid& grid) {
  check(v, l, sigma_o);
  auto f = [&](double e) { return analytics::cic_value({v, e}, road, l, sigma_o); };
  const auto etas = log_grid(grid);
  std::size_t k = 0;
  double best_s = -1.0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double s = f(etas[i]);
    if (s > best_s) {
      best_s = s;
      k = i;
    }
  }
  // Golden section over the two cells around the grid maximum.
  double a = etas[k == 0 ? 0 : k - 1];
  double b = etas[k + 1 == etas.size() ? k : k + 1];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * b; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  const double golden = 0.5 * (a + b);
  if (auto es = eta_star(v, road, l, sigma_o, grid); es && f(*es) >= f(golden)) return *es;
  return golden;
}

EtaR eta_r(double v, double s_hat, const RoadConfig& road, double l, double sigma_o,
           const SearchGrid& grid) {
  road.validate();
  if (!(s_hat > 0.0)) throw std::invalid_argument("eta_r: s_hat must be > 0");
  EtaR r;
  auto s = [&](double e) { return analytics::cic_value({v, e}, road, l, sigma_o); };
  r.eta_argmax = argmax_s(v, road, l, sigma_o, grid);
  r.max_s = s(r.eta_argmax);
  if (r.max_s < s_hat) {
    r.status = Status::Infeasible;
    return r;
  }
  double lo = r.eta_argmax;
  double hi = lo;
  while (true) {
    const double next = std::min(2.0 * hi, grid.eta_max);
    if (s(next) < s_hat) {
      lo = hi;
      hi = next;
      break;
    }
    if (next >= grid.eta_max) {
      r.status = Status::Capped;
      r.eta = grid.eta_max;
      return r;
    }
    hi = next;
  }
  // Decreasing branch: s(lo) >= s_hat > s(hi).
  auto g = [&](double e) { return s(e) - s_hat; };
  r.eta = numerics::brent(g, lo, hi, 1e-14 * hi).x;
  return r;
}

OptimizationResult minimize_collision(double v_min, double v_max, double s_hat,
                                      const RoadConfig& road, double l, double sigma_o,
                                      int n_speeds, const SearchGrid& grid) {
  road.validate();
  if (!(v_min > 0.0) || !(v_max >= v_min) || n_speeds < 1) {
    throw std::invalid_argument("minimize_collision: need 0 < v_min <= v_max");
  }
  OptimizationResult r;
  r.status = Status::Infeasible;
  const auto vs = n_speeds == 1 ? std::vector<double>{v_max}
                                : numerics::linspace(v_min, v_max, static_cast<std::size_t>(n_speeds));
  for (double v : vs) {
    const EtaR er = eta_r(v, s_hat, road, l, sigma_o, grid);
    CurvePoint pt{v, er.eta, Binding::CapacityRoot, er.status, 0.0, er.max_s};
    if (er.status != Status::Infeasible) {
      const auto rep = analytics::cic({v, er.eta}, road, l, sigma_o);
      pt.p = rep.p;
      pt.s = rep.s;
    } else {
      pt.eta = er.eta_argmax;
      pt.p = analytics::collision_probability({v, er.eta_argmax}, l, sigma_o);
    }
    r.curve.push_back(pt);
  }
  // Largest feasible speed wins (p falls with v along eta^r).
  for (auto it = r.curve.rbegin(); it != r.curve.rend(); ++it) {
    if (it->status == Status::Infeasible) continue;
    r.status = it->status;
    r.v_opt = it->v;
    r.eta_opt = it->eta;
    r.binding = Binding::CapacityRoot;
    r.report = analytics::cic({it->v, it->eta}, road, l, sigma_o);
    r.max_s = eta_r(it->v, s_hat, road, l, sigma_o, grid).max_s;
    return r;
  }
  r.v_opt = v_max;
  r.max_s = r.curve.back().s;
  r.eta_opt = r.curve.back().eta;
  r.report = analytics::cic({v_max, r.eta_opt}, road, l, sigma_o);
  return r;
}

}  // namespace avcap::opt

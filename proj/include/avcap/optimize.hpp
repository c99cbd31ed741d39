#pragma once

#include <optional>
#include <string>
#include <vector>

#include "avcap/analytics.hpp"

namespace avcap::opt {

using analytics::CapacityReport;
using analytics::Policy;
using analytics::RoadConfig;

enum class Binding { ConstraintBinding, InteriorStationary, CapacityRoot };
enum class Status { Ok, Infeasible, Capped };

std::string to_string(Binding b);
std::string to_string(Status s);

/// Smallest headway meeting p <= p_hat at speed v (p(v, eta_hat) = p_hat).
double eta_hat(double v, double p_hat, double l, double sigma_o);
/// Same with the cap given as natural log, for caps below the double range.
double eta_hat_log(double v, double log_p_hat, double l, double sigma_o);

struct SearchGrid {
  double eta_min = 1e-3;
  double eta_max = 120.0;
  int points = 4000;
};

/// Capacity-maximizing stationary point of 1/s = eta + (T L/(v tau)) p: the
/// largest eta where 1 + (T L/(v tau)) dp/deta changes sign from - to +.
std::optional<double> eta_star(double v, const RoadConfig& road, double l, double sigma_o,
                               const SearchGrid& grid = {});

struct HeadwayChoice {
  double eta = 0.0;
  Binding binding = Binding::ConstraintBinding;
  double eta_hat = 0.0;
  std::optional<double> eta_star;
};

HeadwayChoice optimal_headway_capacity(double v, double p_hat, const RoadConfig& road, double l,
                                       double sigma_o, const SearchGrid& grid = {});

struct CurvePoint {
  double v = 0.0;
  double eta = 0.0;
  Binding binding = Binding::ConstraintBinding;
  Status status = Status::Ok;
  double p = 0.0;
  double s = 0.0;
};

struct OptimizationResult {
  Status status = Status::Ok;
  double v_opt = 0.0;
  double eta_opt = 0.0;
  Binding binding = Binding::ConstraintBinding;
  CapacityReport report;
  double max_s = 0.0;  // best attainable s at v_opt (infeasible results)
  std::vector<CurvePoint> curve;
};

/// max s s.t. p <= p_hat over v in [v_min, v_max]; optimum at v_max.
OptimizationResult maximize_capacity(double v_min, double v_max, double p_hat,
                                     const RoadConfig& road, double l, double sigma_o,
                                     int n_speeds = 200, const SearchGrid& grid = {});

struct EtaR {
  Status status = Status::Ok;
  double eta = 0.0;        // eta^r, or the cap when Capped
  double eta_argmax = 0.0; // headway maximizing s at this speed
  double max_s = 0.0;
};

/// Largest eta with s(v, eta) >= s_hat.
EtaR eta_r(double v, double s_hat, const RoadConfig& road, double l, double sigma_o,
           const SearchGrid& grid = {});

/// Headway maximizing s at speed v (grid scan refined by golden section).
double argmax_s(double v, const RoadConfig& road, double l, double sigma_o,
                const SearchGrid& grid = {});

/// min p s.t. s >= s_hat over v in [v_min, v_max]; optimum at the largest feasible speed.
OptimizationResult minimize_collision(double v_min, double v_max, double s_hat,
                                      const RoadConfig& road, double l, double sigma_o,
                                      int n_speeds = 200, const SearchGrid& grid = {});

}  // namespace avcap::opt

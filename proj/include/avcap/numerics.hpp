#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace avcap::numerics {

struct RootResult {
  double x;
  double fx;
  int iterations;
};

class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Brent's method (inverse quadratic / secant with bisection fallback).
/// Requires f(lo) and f(hi) of opposite sign (or one of them zero).
RootResult brent(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol = 1e-12, int max_iter = 200);

/// Adaptive Simpson quadrature on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-10, int max_depth = 48);

/// Evenly spaced grid of n >= 1 points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace avcap::numerics

#include "avcap/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace avcap::normal {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLn10 = 2.30258509299404568402;

// Below this the erfc route is replaced by the Mills-ratio continued fraction.
constexpr double kTailSwitch = -20.0;

// Acklam's rational approximation, |rel err| < 1.2e-9; refined by Newton.
double acklam(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double mills_ratio(double x) {
  if (x < 0.0) throw std::domain_error("mills_ratio: x must be >= 0");
  if (x < 5.0) {
    // phi(x) is nowhere near underflow here.
    return 0.5 * std::erfc(x * kInvSqrt2) / pdf(x);
  }
  // Modified Lentz for  1 / (x + 1/(x + 2/(x + 3/(x + ...)))).
  constexpr double tiny = 1e-300;
  double f = x;
  double C = x;
  double D = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double ak = static_cast<double>(k);
    D = x + ak * D;
    if (std::abs(D) < tiny) D = tiny;
    C = x + ak / C;
    if (std::abs(C) < tiny) C = tiny;
    D = 1.0 / D;
    const double delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

double cdf(double z) {
  if (std::isnan(z)) return z;
  if (z >= kTailSwitch) return 0.5 * std::erfc(-z * kInvSqrt2);
  return std::exp(log_cdf(z));
}

double log_cdf(double z) {
  if (std::isnan(z)) return z;
  if (z == std::numeric_limits<double>::infinity()) return 0.0;
  if (z == -std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z * kInvSqrt2));
  if (z >= kTailSwitch) return std::log(0.5 * std::erfc(-z * kInvSqrt2));
  return log_pdf(z) + std::log(mills_ratio(-z));
}

double log10_cdf(double z) { return log_cdf(z) / kLn10; }

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal::quantile: p must lie in [0, 1]");
  }
  if (p > 0.5) return -quantile_from_log(std::log1p(-p));
  return quantile_from_log(std::log(p));
}

double quantile_from_log(double log_p) {
  if (!(log_p < 0.0)) {
    if (log_p == 0.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal::quantile_from_log: log_p must be <= 0");
  }
  double z;
  if (log_p > -700.0) {
    z = acklam(std::exp(log_p));
  } else {
    // Leading asymptotics of the Mills ratio.
    const double t = -2.0 * log_p;
    z = -std::sqrt(t - std::log(t) - 2.0 * kLogSqrt2Pi);
  }
  // Newton on log Phi(z) - log_p; the derivative phi/Phi never underflows in logs.
  for (int it = 0; it < 50; ++it) {
    const double lc = log_cdf(z);
    const double slope = std::exp(log_pdf(z) - lc);
    const double step = (lc - log_p) / slope;
    z -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

}  // namespace avcap::normal

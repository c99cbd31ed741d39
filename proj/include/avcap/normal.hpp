#pragma once

// Standard normal density, CDF and quantile with log-space variants that
// stay accurate deep into the lower tail (well past the double underflow
// point of the CDF itself).

namespace avcap::normal {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Standard normal density.
double pdf(double z);
double log_pdf(double z);

/// Phi(z). Underflows to 0 below z ~ -38.5; use log_cdf there.
double cdf(double z);

/// log Phi(z), finite for every finite z.
double log_cdf(double z);

/// log10 Phi(z).
double log10_cdf(double z);

/// Inverse of cdf on (0, 1).
double quantile(double p);

/// Inverse of log_cdf: returns z with log Phi(z) = log_p, for log_p < 0.
double quantile_from_log(double log_p);

/// Upper-tail Mills ratio Q(x) / phi(x) for x >= 0 (continued fraction).
double mills_ratio(double x);

}  // namespace avcap::normal

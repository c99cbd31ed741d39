#include "avcap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avcap/normal.hpp"

namespace avcap::stats {

std::size_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram histogram(std::span<const double> samples, std::size_t n_bins) {
  if (n_bins < 2) throw std::invalid_argument("histogram: n_bins must be >= 2");
  if (samples.size() < 2) throw InsufficientData("histogram: need >= 2 samples");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw std::invalid_argument("histogram: degenerate range (all samples equal)");
  Histogram h;
  h.edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(n_bins, 0);
  for (double x : samples) {
    auto k = static_cast<std::size_t>((x - lo) / width);
    if (k >= n_bins) k = n_bins - 1;
    // Guard the rounding of (x - lo) / width against the stored edges.
    while (k > 0 && x < h.edges[k]) --k;
    while (k + 1 < n_bins && x >= h.edges[k + 1]) ++k;
    ++h.counts[k];
  }
  return h;
}

GaussianFit fit_gaussian(std::span<const double> samples) {
  if (samples.size() < 2) throw InsufficientData("fit_gaussian: need >= 2 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return {mean, ss / (n - 1.0), samples.size()};
}

std::vector<double> expected_counts(const Histogram& h, const GaussianFit& fit) {
  const double n = static_cast<double>(h.total());
  std::vector<double> out(h.counts.size(), 0.0);
  if (fit.var <= 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool last = i + 1 == out.size();
      if (fit.mu >= h.edges[i] && (fit.mu < h.edges[i + 1] || (last && fit.mu == h.edges[i + 1]))) {
        out[i] = n;
      }
    }
    return out;
  }
  const double sd = std::sqrt(fit.var);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = (h.edges[i] - fit.mu) / sd;
    const double b = (h.edges[i + 1] - fit.mu) / sd;
    // Difference taken on the side farther from the mean to avoid cancellation.
    const double mass = (a >= 0.0) ? normal::cdf(-a) - normal::cdf(-b) : normal::cdf(b) - normal::cdf(a);
    out[i] = n * mass;
  }
  return out;
}

double nrmse(std::span<const double> reference, std::span<const double> experiment) {
  if (reference.size() != experiment.size() || reference.size() < 2) {
    throw std::invalid_argument("nrmse: need equal lengths >= 2");
  }
  const double mean =
      std::accumulate(reference.begin(), reference.end(), 0.0) / static_cast<double>(reference.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    num += (reference[i] - experiment[i]) * (reference[i] - experiment[i]);
    den += (reference[i] - mean) * (reference[i] - mean);
  }
  if (den == 0.0) throw std::domain_error("nrmse: constant reference");
  return std::sqrt(num / den);
}

FitReport gaussian_fit_report(std::span<const double> samples, std::size_t n_bins) {
  FitReport r;
  r.fit = fit_gaussian(samples);
  r.hist = histogram(samples, n_bins);
  r.expected = expected_counts(r.hist, r.fit);
  std::vector<double> observed(r.hist.counts.begin(), r.hist.counts.end());
  r.nrmse = nrmse(r.expected, observed);
  return r;
}

double silverman_bandwidth(std::span<const double> samples) {
  const GaussianFit f = fit_gaussian(samples);
  return 1.06 * std::sqrt(f.var) * std::pow(static_cast<double>(samples.size()), -0.2);
}

Kde::Kde(std::vector<double> samples, double bandwidth) : xs_(std::move(samples)), h_(bandwidth) {
  if (xs_.size() < 10) throw InsufficientData("kde: need >= 10 samples");
  for (double x : xs_) {
    if (!std::isfinite(x)) throw std::invalid_argument("kde: non-finite sample");
  }
  std::sort(xs_.begin(), xs_.end());
  if (!(h_ > 0.0)) h_ = silverman_bandwidth(xs_);
  if (!(h_ > 0.0)) throw std::invalid_argument("kde: zero bandwidth (constant sample)");
}

double Kde::operator()(double x) const {
  // Kernels beyond 40 bandwidths contribute below 1e-340.
  const auto lo = std::lower_bound(xs_.begin(), xs_.end(), x - 40.0 * h_);
  const auto hi = std::upper_bound(xs_.begin(), xs_.end(), x + 40.0 * h_);
  double s = 0.0;
  for (auto it = lo; it != hi; ++it) s += normal::pdf((x - *it) / h_);
  return s / (static_cast<double>(xs_.size()) * h_);
}

double Kde::cdf(double x) const {
  // Kernel CDFs summed directly; monotone in x by construction.
  double s = 0.0;
  for (double xi : xs_) s += normal::cdf((x - xi) / h_);
  return s / static_cast<double>(xs_.size());
}

double empirical_collision_prob(const Kde& density, double l) {
  return std::clamp(density.cdf(l), 0.0, 1.0);
}

}  // namespace avcap::stats

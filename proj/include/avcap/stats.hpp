#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace avcap::stats {

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;

  std::size_t total() const;
};

/// Equal-width bins over [min, max]; the last bin includes its right edge.
Histogram histogram(std::span<const double> samples, std::size_t n_bins = 100);

struct GaussianFit {
  double mu = 0.0;
  double var = 0.0;
  std::size_t n = 0;
};

/// Sample mean and unbiased variance.
GaussianFit fit_gaussian(std::span<const double> samples);

/// n * (Phi(right) - Phi(left)) per bin under the fitted law.
std::vector<double> expected_counts(const Histogram& h, const GaussianFit& fit);

/// ||ref - exp|| / ||ref - mean(ref)||.
double nrmse(std::span<const double> reference, std::span<const double> experiment);

struct FitReport {
  GaussianFit fit;
  Histogram hist;
  std::vector<double> expected;
  double nrmse = 0.0;
};

FitReport gaussian_fit_report(std::span<const double> samples, std::size_t n_bins = 100);

/// Gaussian-kernel density estimate.
class Kde {
 public:
  /// bandwidth <= 0 selects Silverman's rule 1.06 * sd * n^(-1/5).
  explicit Kde(std::vector<double> samples, double bandwidth = 0.0);

  double operator()(double x) const;
  /// Mass of (-inf, x], integrated kernel by kernel.
  double cdf(double x) const;

  double bandwidth() const { return h_; }
  std::size_t size() const { return xs_.size(); }
  double min() const { return xs_.front(); }
  double max() const { return xs_.back(); }

 private:
  std::vector<double> xs_;  // sorted
  double h_;
};

double silverman_bandwidth(std::span<const double> samples);

/// Left-tail mass up to l, clamped to [0, 1].
double empirical_collision_prob(const Kde& density, double l);

}  // namespace avcap::stats

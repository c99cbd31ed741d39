#include "avcap/numerics.hpp"

#include <cmath>
#include <utility>

namespace avcap::numerics {

RootResult brent(const std::function<double(double)>& f, double lo, double hi, double abs_tol,
                 int max_iter) {
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return {a, fa, 0};
  if (fb == 0.0) return {b, fb, 0};
  if ((fa > 0.0) == (fb > 0.0)) {
    throw BracketError("brent: root is not bracketed");
  }
  if (std::abs(fa) < std::abs(fb)) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = a, fc = fa;
  double d = b - a;
  bool bisected = true;
  for (int it = 1; it <= max_iter; ++it) {
    double s;
    if (fa != fc && fb != fc) {
      s = a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) +
          c * fa * fb / ((fc - fa) * (fc - fb));
    } else {
      s = b - fb * (b - a) / (fb - fa);
    }
    const double m = (3.0 * a + b) / 4.0;
    const bool outside = !((s > std::min(m, b) && s < std::max(m, b)));
    const bool slow_after_bisect = bisected && std::abs(s - b) >= std::abs(b - c) / 2.0;
    const bool slow_after_interp = !bisected && std::abs(s - b) >= std::abs(c - d) / 2.0;
    const bool tiny_after_bisect = bisected && std::abs(b - c) < abs_tol;
    const bool tiny_after_interp = !bisected && std::abs(c - d) < abs_tol;
    if (outside || slow_after_bisect || slow_after_interp || tiny_after_bisect ||
        tiny_after_interp) {
      s = 0.5 * (a + b);
      bisected = true;
    } else {
      bisected = false;
    }
    const double fs = f(s);
    d = c;
    c = b;
    fc = fb;
    if ((fa > 0.0) != (fs > 0.0)) {
      b = s;
      fb = fs;
    } else {
      a = s;
      fa = fs;
    }
    if (std::abs(fa) < std::abs(fb)) {
      std::swap(a, b);
      std::swap(fa, fb);
    }
    if (fb == 0.0 || std::abs(b - a) <= abs_tol) return {b, fb, it};
  }
  return {b, fb, max_iter};
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b,
                    double fb, double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  // A fixed 16-panel pass first so narrow features are not skipped by the
  // first coarse error estimate.
  constexpr int kPanels = 16;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double lo = a + i * h;
    const double hi = (i + 1 == kPanels) ? b : lo + h;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fhi = f(hi), fmid = f(mid);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += simpson_step(f, lo, flo, hi, fhi, mid, fmid, whole, abs_tol / kPanels, max_depth);
  }
  return total;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  if (n == 0) return out;
  out.reserve(n);
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

}  // namespace avcap::numerics

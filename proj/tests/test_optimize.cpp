#include <doctest.h>

#include <cmath>
#include <random>

#include "avcap/analytics.hpp"
#include "avcap/optimize.hpp"

using namespace avcap;
using analytics::RoadConfig;

namespace {

constexpr double kV50 = 50.0 / 3.6;
constexpr double kL = 5.0;
constexpr double kSigma = 0.05;

double p_of(double v, double eta, double sigma = kSigma) {
  return analytics::collision_probability({v, eta}, kL, sigma);
}

double s_of(double v, double eta, const RoadConfig& road, double sigma = kSigma) {
  return analytics::cic_value({v, eta}, road, kL, sigma);
}

}  // namespace

TEST_CASE("eta_hat: threshold at p_hat = 0.5 and back-substitution") {
  CHECK(opt::eta_hat(kV50, 0.5, kL, kSigma) == doctest::Approx(kL / kV50).epsilon(1e-12));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uv(3.0, 40.0), ulp(-250.0, -1.0), us(0.02, 0.5);
  for (int i = 0; i < 100; ++i) {
    const double v = uv(rng), lp = ulp(rng), s = us(rng);
    const double p_hat = std::pow(10.0, lp);
    const double eta = opt::eta_hat(v, p_hat, kL, s);
    CHECK(p_of(v, eta, s) == doctest::Approx(p_hat).epsilon(1e-9));
    CHECK(p_of(v, eta * (1.0 + 1e-6), s) < p_hat);
    CHECK(p_of(v, eta * (1.0 - 1e-6), s) > p_hat);
  }
  const double e = opt::eta_hat_log(kV50, std::log(1e-300) * 2.0, kL, kSigma);
  CHECK(analytics::log_collision_probability({kV50, e}, kL, kSigma) ==
        doctest::Approx(std::log(1e-300) * 2.0).epsilon(1e-9));
}

TEST_CASE("iso-probability headway falls as speed rises") {
  for (double p_hat : {1e-4, 1e-8, 1e-10, 1e-30}) {
    double prev = INFINITY;
    for (double v = 5.0; v <= 40.0; v += 1.0) {
      const double e = opt::eta_hat(v, p_hat, kL, kSigma);
      CHECK(e < prev);
      prev = e;
    }
  }
}

TEST_CASE("eta_star is a minimum of 1/s") {
  const RoadConfig road;
  for (double v : {20.0 / 3.6, kV50, 80.0 / 3.6, 100.0 / 3.6}) {
    const auto e = opt::eta_star(v, road, kL, kSigma);
    REQUIRE(e.has_value());
    auto inv_s = [&](double eta) { return 1.0 / s_of(v, eta, road); };
    const double h = 1e-5 * *e;
    const double d1 = (inv_s(*e + h) - inv_s(*e - h)) / (2.0 * h);
    CHECK(std::abs(d1) <= 1e-6 * 1.0 + 1e-5);
    CHECK(inv_s(*e + 10.0 * h) > inv_s(*e));
    CHECK(inv_s(*e - 10.0 * h) > inv_s(*e));
  }
}

TEST_CASE("heavier collision penalty pushes eta_star up") {
  RoadConfig small, big;
  big.L = 50000.0;
  const auto a = opt::eta_star(kV50, small, kL, kSigma);
  const auto b = opt::eta_star(kV50, big, kL, kSigma);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(*b > *a);
}

TEST_CASE("eta_star approaches l/v as the noise vanishes") {
  const RoadConfig road;
  double prev = INFINITY;
  for (double s : {0.05, 0.01, 1e-3, 1e-4}) {
    const auto e = opt::eta_star(kV50, road, kL, s);
    REQUIRE(e);
    CHECK(*e < prev);
    CHECK(*e > kL / kV50);
    prev = *e;
  }
  CHECK(prev == doctest::Approx(kL / kV50).epsilon(0.01));
  // Below the search-grid resolution the dip is not resolved.
  CHECK_FALSE(opt::eta_star(kV50, road, kL, 1e-6).has_value());
}

TEST_CASE("binding branch switches with p_hat and stays feasible") {
  const RoadConfig road;
  const double v = 100.0 / 3.6;
  const auto loose = opt::optimal_headway_capacity(v, 1e-8, road, kL, kSigma);
  const auto tight = opt::optimal_headway_capacity(v, 1e-10, road, kL, kSigma);
  CHECK(loose.binding == opt::Binding::InteriorStationary);
  CHECK(tight.binding == opt::Binding::ConstraintBinding);
  for (double p_hat : {1e-4, 1e-8, 1e-10, 1e-20}) {
    for (double kmh = 20.0; kmh <= 100.0; kmh += 20.0) {
      const auto c = opt::optimal_headway_capacity(kmh / 3.6, p_hat, road, kL, kSigma);
      CHECK(p_of(kmh / 3.6, c.eta) <= p_hat * (1.0 + 1e-9) + 1e-12);
      CHECK(c.eta == doctest::Approx(std::max(c.eta_hat, c.eta_star.value_or(0.0))));
    }
  }
}

TEST_CASE("capacity maximization: top speed, monotone curve, grid oracle") {
  const RoadConfig road;
  const double vlo = 20.0 / 3.6, vhi = 100.0 / 3.6;
  for (double p_hat : {1e-8, 1e-10}) {
    const auto r = opt::maximize_capacity(vlo, vhi, p_hat, road, kL, kSigma, 50);
    CHECK(r.status == opt::Status::Ok);
    CHECK(r.v_opt == vhi);
    REQUIRE(r.curve.size() == 50);
    for (std::size_t i = 1; i < r.curve.size(); ++i) CHECK(r.curve[i].s > r.curve[i - 1].s * (1.0 + 1e-12));
    double best = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double v = vlo + (vhi - vlo) * i / 199.0;
      for (int j = 0; j < 200; ++j) {
        const double eta = 0.2 + 2.8 * j / 199.0;
        if (p_of(v, eta) <= p_hat) best = std::max(best, s_of(v, eta, road));
      }
    }
    CHECK(r.report.s >= best * (1.0 - 1e-3));
    CHECK(r.report.p <= p_hat * (1.0 + 1e-9));
  }
}

TEST_CASE("eta_r: back-substitution, infeasible, capped") {
  const RoadConfig road;
  const double v = kV50;
  const double arg = opt::argmax_s(v, road, kL, kSigma);
  const double smax = s_of(v, arg, road);
  const auto near = opt::eta_r(v, smax * (1.0 - 1e-6), road, kL, kSigma);
  CHECK(near.status == opt::Status::Ok);
  CHECK(near.eta > arg);
  CHECK(near.eta < arg * 1.05);
  CHECK(s_of(v, near.eta, road) == doctest::Approx(smax * (1.0 - 1e-6)).epsilon(1e-9));
  const auto mid = opt::eta_r(v, 0.3, road, kL, kSigma);
  CHECK(s_of(v, mid.eta, road) == doctest::Approx(0.3).epsilon(1e-9));
  const auto none = opt::eta_r(v, smax * 1.01, road, kL, kSigma);
  CHECK(none.status == opt::Status::Infeasible);
  CHECK(none.max_s == doctest::Approx(smax).epsilon(1e-6));
  const auto cap = opt::eta_r(v, 1e-5, road, kL, kSigma);
  CHECK(cap.status == opt::Status::Capped);
  CHECK(cap.eta == 120.0);
}

TEST_CASE("collision minimization: top feasible speed, binding, monotone p, grid oracle") {
  const RoadConfig road;
  const double vlo = 20.0 / 3.6, vhi = 100.0 / 3.6;
  const double s_hat = 1500.0 / 3600.0;
  const auto r = opt::minimize_collision(vlo, vhi, s_hat, road, kL, kSigma, 50);
  REQUIRE(r.status == opt::Status::Ok);
  CHECK(r.v_opt == doctest::Approx(vhi));
  CHECK(r.report.s == doctest::Approx(s_hat).epsilon(1e-9));
  double prev = INFINITY;
  for (const auto& c : r.curve) {
    if (c.status != opt::Status::Ok) continue;
    CHECK(c.p < prev);
    prev = c.p;
  }
  double best = INFINITY;
  for (int i = 0; i < 200; ++i) {
    const double v = vlo + (vhi - vlo) * i / 199.0;
    for (int j = 0; j < 200; ++j) {
      const double eta = 0.3 + 2.7 * j / 199.0;
      if (s_of(v, eta, road) >= s_hat) {
        best = std::min(best, analytics::log_collision_probability({v, eta}, kL, kSigma));
      }
    }
  }
  CHECK(analytics::log_collision_probability({r.v_opt, r.eta_opt}, kL, kSigma) <= best + std::log1p(1e-3));
  const auto inf = opt::minimize_collision(vlo, vhi, 10.0, road, kL, kSigma, 20);
  CHECK(inf.status == opt::Status::Infeasible);
}

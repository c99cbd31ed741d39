#include "avcap/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "avcap/rng.hpp"

namespace avcap::st {

namespace {

constexpr double kNever = -std::numeric_limits<double>::infinity();

struct Veh {
  double x = 0.0;
  bool moving = true;
  double blocked_until = kNever;
  double stop_time = kNever;
};

using Lane = std::deque<Veh>;

// Failures before the next success of a Bernoulli(p) sequence.
double geometric_skip(Rng& rng, double p) {
  if (p >= 1.0) return 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  while (r <= 0.0) r = u(rng);
  const double g = std::floor(std::log(r) / std::log1p(-p));
  return std::min(g, 1e300);
}

struct Sim {
  const SpaceTimeConfig& cfg;
  double v, vh, l, L, H, dt, T, D;
  double margin_up;
  std::vector<Lane> lanes;
  SpaceTimeResult res;
  // Per lane, index into res.probes for each configured probe.
  std::vector<std::vector<std::size_t>> probe_slots;

  explicit Sim(const SpaceTimeConfig& c)
      : cfg(c),
        v(c.policy.v),
        vh(c.policy.v * c.policy.eta),
        l(c.l),
        L(c.road.L),
        H(c.road.H),
        dt(c.road.tau),
        T(analytics::clearance_time(c.road, c.policy.v)),
        D(c.road.D),
        margin_up(std::max(50.0, 3.0 * vh)) {}

  void cross(int lane, double x_old, double x_new, double start) {
    if (x_old >= 0.0 && x_new < 0.0) {
      const double tc = start + x_old / v;
      if (tc >= 0.0 && tc < H) ++res.exits[static_cast<std::size_t>(lane)];
    }
    for (std::size_t slot : probe_slots[static_cast<std::size_t>(lane)]) {
      auto& pr = res.probes[slot];
      if (x_old >= pr.x && x_new < pr.x) pr.crossings.push_back(start + (x_old - pr.x) / v);
    }
  }

  void stop_vehicle(Veh& veh, double t) {
    veh.moving = false;
    veh.blocked_until = t + T;
    veh.stop_time = t;
  }

  void apply_forced(const ForcedCollision& f, double t) {
    if (f.lane < 0 || f.lane >= cfg.n_lanes) return;
    Lane& q = lanes[static_cast<std::size_t>(f.lane)];
    Veh* best = nullptr;
    for (auto& veh : q) {
      if (!veh.moving || veh.x < 0.0 || veh.x > L) continue;
      if (!best || std::abs(veh.x - f.x) < std::abs(best->x - f.x)) best = &veh;
    }
    if (!best) return;
    stop_vehicle(*best, t);
    res.events.push_back({t, best->x, f.lane, true});
  }

  void move_lane(int lane, double t, double t_end) {
    Lane& q = lanes[static_cast<std::size_t>(lane)];
    for (std::size_t i = 0; i < q.size(); ++i) {
      Veh& veh = q[i];
      const Veh* lead = i > 0 ? &q[i - 1] : nullptr;  // already advanced
      const double earliest = std::max(t, veh.blocked_until);
      if (earliest >= t_end) continue;
      double start;
      if (veh.moving) {
        start = t;
      } else if (!lead) {
        start = earliest;
      } else {
        const double gap = veh.x - lead->x;
        if (gap < vh) continue;
        start = lead->moving ? std::max(earliest, t_end - (gap - vh) / v) : earliest;
        if (start >= t_end) continue;
      }
      const double x_old = veh.x;
      double x_new = x_old - v * (t_end - start);
      bool moving = true;
      if (lead && x_new < lead->x + l) {
        x_new = std::min(x_old, lead->x + l);
        moving = false;
      }
      if (!moving) {
        veh.stop_time = veh.moving || x_new < x_old ? start + (x_old - x_new) / v : veh.stop_time;
      }
      veh.x = x_new;
      veh.moving = moving;
      if (x_new < x_old) cross(lane, x_old, x_new, start);
    }
    while (!q.empty() && q.front().x < -(2.0 * vh + l)) q.pop_front();
    while (q.back().x <= L + margin_up) {
      const Veh& tail = q.back();
      Veh n;
      n.moving = tail.moving;
      n.x = tail.x + (tail.moving ? vh : l);
      if (!n.moving) n.stop_time = t_end;
      q.push_back(n);
    }
  }

  void merges(double t, double t_end) {
    std::vector<std::vector<double>> blocked(2);
    for (int k = 0; k < 2; ++k) {
      for (const auto& veh : lanes[static_cast<std::size_t>(k)]) {
        if (veh.blocked_until > t_end) blocked[static_cast<std::size_t>(k)].push_back(veh.x);
      }
    }
    for (int a = 0; a < 2; ++a) {
      const int b = 1 - a;
      Lane& qa = lanes[static_cast<std::size_t>(a)];
      Lane& qb = lanes[static_cast<std::size_t>(b)];
      for (std::size_t i = 0; i < qa.size();) {
        const Veh veh = qa[i];
        if (veh.moving || veh.blocked_until > t_end || veh.x < 0.0 || veh.x > L) {
          ++i;
          continue;
        }
        const auto it = std::lower_bound(qb.begin(), qb.end(), veh.x,
                                         [](const Veh& o, double x) { return o.x < x; });
        const Veh* ahead = it != qb.begin() ? &*(it - 1) : nullptr;
        const Veh* behind = it != qb.end() ? &*it : nullptr;
        bool ok = (!ahead || veh.x - ahead->x >= vh) && (!behind || behind->x - veh.x >= vh);
        for (double xb : blocked[static_cast<std::size_t>(b)]) {
          if (std::abs(veh.x - xb) < D) ok = false;
        }
        if (!ok) {
          ++i;
          continue;
        }
        double t_m = std::max({t, veh.stop_time, veh.blocked_until});
        if (ahead && ahead->moving) {
          t_m = std::max(t_m, t_end - (veh.x - ahead->x - vh) / v);
        } else if (ahead) {
          t_m = t_end;  // restarts next step behind a stopped vehicle
        }
        if (behind && behind->moving && behind->x + v * (t_end - t_m) - veh.x < vh) {
          ++i;
          continue;
        }
        Veh m = veh;
        m.x = veh.x - v * (t_end - t_m);
        m.moving = t_m < t_end;
        const auto pos = it - qb.begin();
        qa.erase(qa.begin() + static_cast<std::ptrdiff_t>(i));
        qb.insert(qb.begin() + pos, m);
        ++res.merges;
        if (m.x < veh.x) cross(b, veh.x, m.x, t_m);
      }
    }
  }

  SpaceTimeResult run() {
    const int nl = cfg.n_lanes;
    res.exits.assign(static_cast<std::size_t>(nl), 0);
    probe_slots.assign(static_cast<std::size_t>(nl), {});
    for (int k = 0; k < nl; ++k) {
      for (double xp : cfg.probes) {
        probe_slots[static_cast<std::size_t>(k)].push_back(res.probes.size());
        res.probes.push_back({xp, k, {}});
      }
    }
    Rng rng = make_rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    lanes.assign(static_cast<std::size_t>(nl), {});
    for (auto& q : lanes) {
      const double phase = cfg.random_phase ? vh * unif(rng) : 0.0;
      double x = phase - vh * std::floor((phase + 2.0 * vh) / vh);
      for (; x <= L + margin_up; x += vh) q.push_back({x, true, kNever, kNever});
    }

    res.p = cfg.random_collisions
                ? analytics::collision_probability(cfg.policy, l, cfg.sigma_o)
                : 0.0;
    double skip = res.p > 0.0 ? geometric_skip(rng, res.p) : 0.0;

    std::vector<ForcedCollision> forced = cfg.forced;
    std::sort(forced.begin(), forced.end(),
              [](const auto& a, const auto& b) { return a.t < b.t; });
    std::size_t next_forced = 0;

    const double t_stop = cfg.t_end > cfg.t_start ? cfg.t_end : H;
    const auto n_steps = static_cast<long long>(std::ceil((t_stop - cfg.t_start) / dt - 1e-9));
    std::vector<std::pair<int, std::size_t>> eligible;
    for (long long k = 0; k < n_steps; ++k) {
      const double t = cfg.t_start + static_cast<double>(k) * dt;
      const double t_end = cfg.t_start + static_cast<double>(k + 1) * dt;

      while (next_forced < forced.size() && forced[next_forced].t < t_end) {
        apply_forced(forced[next_forced], t);
        ++next_forced;
      }

      if (res.p > 0.0) {
        eligible.clear();
        for (int ln = 0; ln < nl; ++ln) {
          const Lane& q = lanes[static_cast<std::size_t>(ln)];
          for (std::size_t i = 1; i < q.size(); ++i) {
            const Veh& f = q[i];
            if (f.x > L) break;
            if (f.x < 0.0 || !f.moving || !q[i - 1].moving) continue;
            if (f.x - q[i - 1].x < 1.5 * vh) eligible.emplace_back(ln, i);
          }
        }
        const auto E = static_cast<double>(eligible.size());
        if (skip >= E) {
          skip -= E;
        } else {
          double idx = skip;
          while (idx < E) {
            const auto [ln, i] = eligible[static_cast<std::size_t>(idx)];
            Veh& f = lanes[static_cast<std::size_t>(ln)][i];
            if (f.moving) {
              stop_vehicle(f, t);
              res.events.push_back({t, f.x, ln, false});
            }
            idx += 1.0 + geometric_skip(rng, res.p);
          }
          skip = idx - E;
        }
      }

      for (int ln = 0; ln < nl; ++ln) move_lane(ln, t, t_end);
      if (cfg.lane_change && nl == 2) merges(t, t_end);
    }
    res.total_exits = 0;
    for (long long e : res.exits) res.total_exits += e;
    return std::move(res);
  }
};

}  // namespace

double stationary_window(const Policy& pol, const RoadConfig& road, double l) {
  const double c = std::abs(analytics::jam_wave_speed(pol, l));
  return analytics::clearance_time(road, pol.v) + road.L / pol.v + road.L / c + 10.0 * pol.eta;
}

SpaceTimeResult simulate(const SpaceTimeConfig& cfg) {
  cfg.policy.validate();
  cfg.road.validate();
  if (cfg.n_lanes < 1 || cfg.n_lanes > 2) throw std::invalid_argument("space-time: 1 or 2 lanes");
  if (cfg.lane_change && cfg.n_lanes != 2) {
    throw std::invalid_argument("space-time: lane changing needs 2 lanes");
  }
  if (!(cfg.policy.v * cfg.policy.eta > cfg.l)) {
    throw std::invalid_argument("space-time: need v*eta > l");
  }
  if (cfg.random_collisions) {
    const double per_hour = (3600.0 / cfg.road.tau) * analytics::vehicle_count(cfg.policy, cfg.road) *
                            analytics::collision_probability(cfg.policy, cfg.l, cfg.sigma_o) *
                            cfg.n_lanes;
    if (per_hour > 50.0) {
      throw OutOfRegime("expected collisions per hour " + std::to_string(per_hour) +
                        " exceed 50; outside the rare-event regime");
    }
  }
  Sim sim(cfg);
  return sim.run();
}

double abnormal_duration(const ProbeRecord& probe, double eta) {
  if (probe.crossings.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double worst = 0.0;
  for (std::size_t i = 1; i < probe.crossings.size(); ++i) {
    worst = std::max(worst, probe.crossings[i] - probe.crossings[i - 1]);
  }
  return worst - eta;
}

}  // namespace avcap::st

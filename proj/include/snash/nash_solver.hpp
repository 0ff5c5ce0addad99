#ifndef SNASH_NASH_SOLVER_HPP
#define SNASH_NASH_SOLVER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "snash/errors.hpp"
#include "snash/grid.hpp"
#include "snash/pde_core.hpp"
#include "snash/weights.hpp"

namespace snash {

struct FollowerConfig {
  std::array<double, 2> alpha{1.0, 1.0};  // tracking weights
  std::array<double, 2> mu{1.0, 1.0};     // control penalties
  std::array<Interval, 2> regions{Interval{0.2, 0.4}, Interval{0.6, 0.8}};
  Interval observation{0.45, 0.55};       // shared O_d
  std::array<Vec2, 2> target{};           // constant targets (y_1d, y_2d) per follower
};

// Everything a follower or leader solve needs about one discretized problem.
struct Problem {
  Grid grid;
  TransformedCoefficients tc;
  CouplingF F;
  FollowerConfig followers;
  Interval leader_region{0.3, 0.8};
  RhoProfile rho;       // sampled on grid.times()
  StatePair initial;    // level 0 holds the initial data
  StepOptions step;
  double delta_frac = 0.01;

  Mask leader_mask() const { return make_mask(leader_region, grid); }
  Mask follower_mask(int i) const { return make_mask(followers.regions[static_cast<std::size_t>(i)], grid); }
  Mask observation_mask() const { return make_mask(followers.observation, grid); }
};

// Quadrature of the tracking term: piecewise-linear in time over the
// truncated window, trapezoid in space over the observation mask.
struct TrackingQuadrature {
  std::vector<double> time;   // per level
  std::vector<double> space;  // per node
};

inline TrackingQuadrature tracking_quadrature(const Grid& g, const Mask& od, double delta_frac) {
  TrackingQuadrature q{std::vector<double>(static_cast<std::size_t>(g.levels()), 0.0),
                       std::vector<double>(static_cast<std::size_t>(g.nodes()), 0.0)};
  const double a = delta_frac * g.T, b = (1.0 - delta_frac) * g.T, dt = g.dt();
  for (int m = 0; m < g.n_t; ++m) {
    const double t0 = g.t(m), t1 = g.t(m + 1);
    const double c = std::max(a, t0), d = std::min(b, t1);
    if (d <= c) continue;
    // integrals of (t1 - t)/dt and (t - t0)/dt over [c, d]
    q.time[static_cast<std::size_t>(m)] += ((t1 - c) * (t1 - c) - (t1 - d) * (t1 - d)) / (2.0 * dt);
    q.time[static_cast<std::size_t>(m + 1)] += ((d - t0) * (d - t0) - (c - t0) * (c - t0)) / (2.0 * dt);
  }
  const double dx = g.dx();
  for (int j = od.j_lo; j <= od.j_hi; ++j)
    q.space[static_cast<std::size_t>(j)] = (j == od.j_lo || j == od.j_hi) ? 0.5 * dx : dx;
  if (od.count() == 1) q.space[static_cast<std::size_t>(od.j_lo)] = dx;
  return q;
}

// Follower controls live on O_i and on levels n >= 1 inside the truncated
// window; the control term uses the rectangle rule dt*dx that matches how
// implicit Euler injects sources.
inline bool control_level(const Problem& P, int n) {
  return n >= 1 && P.rho.active[static_cast<std::size_t>(n)] != 0;
}

inline double evaluate_J(int i, const StatePair& state, const Field& v, const Problem& P) {
  const auto ii = static_cast<std::size_t>(i);
  const Grid& g = P.grid;
  const auto q = tracking_quadrature(g, P.observation_mask(), P.delta_frac);
  const Vec2 yd = P.followers.target[ii];
  double track = 0.0;
  for (int n = 0; n <= g.n_t; ++n) {
    const double wt = q.time[static_cast<std::size_t>(n)];
    if (wt == 0.0) continue;
    for (int j = 1; j <= g.n_x; ++j) {
      const double wx = q.space[static_cast<std::size_t>(j)];
      if (wx == 0.0) continue;
      const double e1 = state.y1(n, j) - yd[0], e2 = state.y2(n, j) - yd[1];
      track += wt * wx * (e1 * e1 + e2 * e2);
    }
  }
  const Mask oi = P.follower_mask(i);
  double ctrl = 0.0;
  for (int n = 1; n <= g.n_t; ++n) {
    const bool live = control_level(P, n);
    const double scale = live ? std::exp(P.rho.log_rho_star[static_cast<std::size_t>(n)]) : 0.0;
    for (int j = oi.j_lo; j <= oi.j_hi; ++j) {
      const double vv = v(n, j);
      if (vv == 0.0) continue;
      if (!live) return std::numeric_limits<double>::infinity();
      const double w = scale * vv;
      ctrl += w * w;
    }
  }
  ctrl *= g.dt() * g.dx();
  return 0.5 * P.followers.alpha[ii] * track + 0.5 * P.followers.mu[ii] * ctrl;
}

// v^i = -(1/mu_i) rho_star^{-2} p^i_1 on O_i, zero elsewhere.
inline std::array<Field, 2> follower_controls_from_adjoint(const AdjointQuad& adj, const Problem& P) {
  std::array<Field, 2> v{Field(P.grid), Field(P.grid)};
  for (int i = 0; i < 2; ++i) {
    const Mask oi = P.follower_mask(i);
    const double inv_mu = 1.0 / P.followers.mu[static_cast<std::size_t>(i)];
    for (int n = 1; n <= P.grid.n_t; ++n) {
      if (!control_level(P, n)) continue;
      const double r = P.rho.rho_star_inv2[static_cast<std::size_t>(n)];
      for (int j = oi.j_lo; j <= oi.j_hi; ++j) v[static_cast<std::size_t>(i)](n, j) = -inv_mu * r * adj.p[i].y1(n, j);
    }
  }
  return v;
}

// Right-hand side of the state system: h on O, v^1 + v^2 on O_1, O_2 (first
// component), plus optional extra sources on both components.
inline StatePair assemble_sources(const Problem& P, const Field* h, const std::array<Field, 2>& v,
                                  const StatePair* extra = nullptr) {
  const Grid& g = P.grid;
  StatePair s(g);
  if (extra != nullptr) s = *extra;
  if (h != nullptr) {
    const Mask o = P.leader_mask();
    for (int n = 1; n <= g.n_t; ++n)
      for (int j = o.j_lo; j <= o.j_hi; ++j) s.y1(n, j) += (*h)(n, j);
  }
  for (int i = 0; i < 2; ++i) {
    const Mask oi = P.follower_mask(i);
    for (int n = 1; n <= g.n_t; ++n)
      for (int j = oi.j_lo; j <= oi.j_hi; ++j) s.y1(n, j) += v[static_cast<std::size_t>(i)](n, j);
  }
  return s;
}

// Adjoint sources alpha_i (y - y_d^i) on O_d, scaled so that the discrete
// adjoint is the exact gradient of the quadrature of J_i.
inline StatePair tracking_sources(int i, const StatePair& y, const Problem& P) {
  const Grid& g = P.grid;
  const auto ii = static_cast<std::size_t>(i);
  const auto q = tracking_quadrature(g, P.observation_mask(), P.delta_frac);
  const double alpha = P.followers.alpha[ii];
  const Vec2 yd = P.followers.target[ii];
  const double scale = 1.0 / (g.dx() * g.dt());
  StatePair s(g);
  if (alpha == 0.0) return s;
  for (int n = 0; n <= g.n_t; ++n) {
    const double wt = q.time[static_cast<std::size_t>(n)];
    if (wt == 0.0) continue;
    for (int j = 1; j <= g.n_x; ++j) {
      const double w = wt * q.space[static_cast<std::size_t>(j)] * scale * alpha;
      if (w == 0.0) continue;
      s.y1(n, j) = w * (y.y1(n, j) - yd[0]);
      s.y2(n, j) = w * (y.y2(n, j) - yd[1]);
    }
  }
  return s;
}

// J_i after a fresh forward solve with the given controls.
inline double evaluate_J_at(int i, const Field* h, const std::array<Field, 2>& v, const Problem& P) {
  const StatePair y = solve_forward(P.grid, P.tc, P.F, P.initial, assemble_sources(P, h, v), P.step);
  return evaluate_J(i, y, v[static_cast<std::size_t>(i)], P);
}

struct NashOptions {
  double omega = 0.7;
  double tol = 1e-9;
  int max_outer = 200;
};

struct NashResult {
  std::array<Field, 2> v;
  StatePair state;
  AdjointQuad adjoint;
  std::array<double, 2> J{};
  std::array<double, 2> residual{};  // characterization residual per follower
  std::vector<double> history;       // relative update per iteration
  int iterations = 0;
  bool converged = false;
};

namespace detail {
inline double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}
inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  auto va = a.values(), vb = b.values();
  for (std::size_t k = 0; k < va.size(); ++k) m = std::max(m, std::abs(va[k] - vb[k]));
  return m;
}
}  // namespace detail

// State and both adjoints for given controls.
inline void solve_state_and_adjoints(const Problem& P, const Field* h, const std::array<Field, 2>& v,
                                     StatePair& state, AdjointQuad& adj, const StatePair* extra = nullptr) {
  const StatePair src = assemble_sources(P, h, v, extra);
  state = solve_forward(P.grid, P.tc, P.F, P.initial, src, P.step);
  const Linearization lin = Linearization::along(P.grid, P.F, state, P.step);
  adj = AdjointQuad(P.grid);
  for (int i = 0; i < 2; ++i) adj.p[i] = solve_adjoint(P.grid, P.tc, lin, tracking_sources(i, state, P));
}

// Damped fixed point on the follower characterization for a fixed leader h.
inline NashResult solve_nash(const Field* h, const Problem& P, const NashOptions& opt = {}) {
  NashResult R;
  R.v = {Field(P.grid), Field(P.grid)};
  for (int k = 1; k <= opt.max_outer; ++k) {
    solve_state_and_adjoints(P, h, R.v, R.state, R.adjoint);
    const auto vt = follower_controls_from_adjoint(R.adjoint, P);
    double upd = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      Field next(P.grid);
      auto nv = next.values();
      auto cv = R.v[i].values();
      auto tv = vt[i].values();
      for (std::size_t m = 0; m < nv.size(); ++m) nv[m] = (1.0 - opt.omega) * cv[m] + opt.omega * tv[m];
      const double diff = detail::max_abs_diff(next, R.v[i]);
      const double size = detail::max_abs(next);
      upd = std::max(upd, diff == 0.0 ? 0.0 : diff / std::max(size, std::numeric_limits<double>::min()));
      R.v[i] = std::move(next);
    }
    R.history.push_back(upd);
    R.iterations = k;
    if (!std::isfinite(upd)) break;
    if (upd <= opt.tol) {
      R.converged = true;
      break;
    }
  }
  solve_state_and_adjoints(P, h, R.v, R.state, R.adjoint);
  const auto vt = follower_controls_from_adjoint(R.adjoint, P);
  for (std::size_t i = 0; i < 2; ++i) {
    const double d = detail::max_abs_diff(R.v[i], vt[i]);
    const double s = detail::max_abs(R.v[i]);
    R.residual[i] = d == 0.0 ? 0.0 : d / std::max(s, std::numeric_limits<double>::min());
    R.J[i] = evaluate_J(static_cast<int>(i), R.state, R.v[i], P);
  }
  return R;
}

// J_i'(v)(dir) = sum over O_i x window of dt dx (mu_i rho_star^2 v^i + p^i_1) dir.
inline double directional_derivative_J(int i, const Field& dir, const NashResult& at, const Problem& P) {
  const auto ii = static_cast<std::size_t>(i);
  const Mask oi = P.follower_mask(i);
  const double mu = P.followers.mu[ii];
  double s = 0.0;
  for (int n = 1; n <= P.grid.n_t; ++n) {
    const bool live = control_level(P, n);
    const double e = live ? std::exp(P.rho.log_rho_star[static_cast<std::size_t>(n)]) : 0.0;
    for (int j = oi.j_lo; j <= oi.j_hi; ++j) {
      const double d = dir(n, j);
      if (d == 0.0) continue;
      if (!live) return std::numeric_limits<double>::quiet_NaN();
      const double v = at.v[ii](n, j);
      const double rv = v == 0.0 ? 0.0 : (e * v) * e;
      s += (mu * rv + at.adjoint.p[i].y1(n, j)) * d;
    }
  }
  return s * P.grid.dt() * P.grid.dx();
}

// Gaussian direction on O_i x window, scaled by rho_star^{-1} so that the
// weighted control energy stays representable, then unit-normalized in the
// dt dx inner product.
inline Field random_direction(int i, const Problem& P, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field d(P.grid);
  const Mask oi = P.follower_mask(i);
  double norm = 0.0;
  for (int n = 1; n <= P.grid.n_t; ++n) {
    if (!control_level(P, n)) continue;
    const double r = std::exp(-P.rho.log_rho_star[static_cast<std::size_t>(n)]);
    for (int j = oi.j_lo; j <= oi.j_hi; ++j) {
      const double v = gauss(rng) * r;
      d(n, j) = v;
      norm += v * v;
    }
  }
  norm = std::sqrt(norm * P.grid.dt() * P.grid.dx());
  if (norm > 0.0)
    for (double& v : d.values()) v /= norm;
  return d;
}

struct ConvexityEstimate {
  double min_quotient = std::numeric_limits<double>::infinity();
  std::vector<double> quotients;
  double min_rho_star_sq = 0.0;  // over the active levels
};

// Second variation of J_i at a Nash point in direction vbar:
//   Q = <eta^i_1, vbar> + mu_i <rho_star^2 vbar, vbar>
// with theta from the linearized state (source vbar on O_i) and eta from the
// adjoint with sources alpha_i theta on O_d minus the curvature terms of F.
inline double second_variation(int i, const Field& vbar, const NashResult& at, const Problem& P) {
  const Grid& g = P.grid;
  const auto ii = static_cast<std::size_t>(i);
  const Linearization lin = Linearization::along(g, P.F, at.state, P.step);
  StatePair src(g);
  const Mask oi = P.follower_mask(i);
  for (int n = 1; n <= g.n_t; ++n)
    for (int j = oi.j_lo; j <= oi.j_hi; ++j) src.y1(n, j) = vbar(n, j);
  const StatePair theta = solve_tangent(g, P.tc, lin, StatePair(g), src);

  // alpha_i theta on O_d (same quadrature scaling as the first adjoint) - N(theta, p^i)
  const auto q = tracking_quadrature(g, P.observation_mask(), P.delta_frac);
  const double scale = P.followers.alpha[ii] / (g.dx() * g.dt());
  const StatePair& p = at.adjoint.p[i];
  StatePair esrc(g);
  for (int n = 0; n <= g.n_t; ++n) {
    for (int j = 1; j <= g.n_x; ++j) {
      const double w = q.time[static_cast<std::size_t>(n)] * q.space[static_cast<std::size_t>(j)] * scale;
      const double y1 = at.state.y1(n, j), y2 = at.state.y2(n, j);
      const Vec2 th{theta.y1(n, j), theta.y2(n, j)};
      const Vec2 pp{p.y1(n, j), p.y2(n, j)};
      Vec2 N{0.0, 0.0};
      if (!P.F.is_linear()) {
        for (int k = 0; k < 2; ++k)
          for (int r = 0; r < 2; ++r)
            for (int m = 0; m < 2; ++m)
              N[static_cast<std::size_t>(k)] +=
                  P.F.hessian(r, k, m, y1, y2) * th[static_cast<std::size_t>(m)] * pp[static_cast<std::size_t>(r)];
      }
      esrc.y1(n, j) = w * th[0] - N[0];
      esrc.y2(n, j) = w * th[1] - N[1];
    }
  }
  const StatePair eta = solve_adjoint(g, P.tc, lin, esrc);

  double first = 0.0, second = 0.0;
  for (int n = 1; n <= g.n_t; ++n) {
    if (!control_level(P, n)) continue;
    const double e = std::exp(P.rho.log_rho_star[static_cast<std::size_t>(n)]);
    for (int j = oi.j_lo; j <= oi.j_hi; ++j) {
      const double v = vbar(n, j);
      if (v == 0.0) continue;
      first += eta.y1(n, j) * v;
      const double w = e * v;
      second += w * w;
    }
  }
  const double cell = g.dt() * g.dx();
  return first * cell + P.followers.mu[ii] * second * cell;
}

inline double control_norm_sq(const Field& v, const Problem& P) {
  double s = 0.0;
  for (double x : v.values()) s += x * x;
  return s * P.grid.dt() * P.grid.dx();
}

inline ConvexityEstimate estimate_convexity(int i, const NashResult& at, int n_directions, const Problem& P,
                                            std::uint64_t seed) {
  ConvexityEstimate est;
  double min_r = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= P.grid.n_t; ++n)
    if (control_level(P, n)) min_r = std::min(min_r, 2.0 * P.rho.log_rho_star[static_cast<std::size_t>(n)]);
  est.min_rho_star_sq = std::exp(min_r);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < n_directions; ++k) {
    const Field d = random_direction(i, P, rng);
    const double q = second_variation(i, d, at, P) / control_norm_sq(d, P);
    est.quotients.push_back(q);
    est.min_quotient = std::min(est.min_quotient, q);
  }
  return est;
}

}  // namespace snash

#endif  // SNASH_NASH_SOLVER_HPP

#ifndef SNASH_SETUP_HPP
#define SNASH_SETUP_HPP

#include <algorithm>
#include <cmath>
#include <memory>

#include "snash/config.hpp"
#include "snash/nash_solver.hpp"
#include "snash/weights.hpp"

namespace snash {

// Everything derived from a config: geometry, weights, and a ready Problem.
struct Setup {
  ProblemConfig cfg;
  DegenerateDiffusion diffusion;
  MovingDomain domain;
  CarlemanParameters carleman;
  double lambda = 1.0;
  std::shared_ptr<const RhoFamily> rho;
  Problem problem;
};

inline double default_drift_bound(const ProblemConfig& c) {
  if (c.ell == EllFamily::constant) return 0.0;
  MovingDomain probe(c.T, c.ell, c.gamma, 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 1000; ++k) {
    const double t = c.T * k / 1000.0;
    m = std::max(m, probe.ell_prime(t) / probe.ell(t));
  }
  return m;
}

inline StatePair make_initial(const ProblemConfig& c, const Grid& g) {
  StatePair y(g);
  if (c.initial == InitialShape::zero || c.initial_norm == 0.0) return y;
  const double pi = std::acos(-1.0);
  double sq = 0.0;
  for (int j = 1; j <= g.n_x; ++j) {
    const double x = g.x(j);
    const double v = c.initial == InitialShape::sine ? std::sin(c.initial_mode * pi * x) : x * x * (1.0 - x);
    y.y1(0, j) = v;
    y.y2(0, j) = v;
    sq += 2.0 * v * v * g.dx();
  }
  const double scale = sq > 0.0 ? c.initial_norm / std::sqrt(sq) : 0.0;
  for (int j = 1; j <= g.n_x; ++j) {
    y.y1(0, j) *= scale;
    y.y2(0, j) *= scale;
  }
  return y;
}

inline Setup make_setup(const ProblemConfig& c) {
  DegenerateDiffusion diff(c.alpha, c.K.value_or(-1.0));
  MovingDomain dom(c.T, c.ell, c.gamma, c.drift_bound.value_or(default_drift_bound(c)));
  CarlemanParameters cp;
  cp.s = c.s;
  cp.inner_lo = c.inner_lo;
  cp.inner_hi = c.inner_hi;
  cp.validate();
  Psi psi = build_psi(diff, cp);
  const double lambda = c.lambda ? *c.lambda : scan_lambda0(psi, c.T, c.s);
  auto rho = std::make_shared<const RhoFamily>(WeightFamily(psi, c.T, c.s, lambda));

  const Grid g(c.n_x, c.n_t, c.T);
  Problem P{g,
            TransformedCoefficients(diff, dom),
            CouplingF(c.coupling, c.c),
            FollowerConfig{c.follower_alpha, c.mu, {c.O1, c.O2}, c.Od, c.target},
            c.O,
            make_rho_profile(*rho, g.times(), c.delta_frac),
            make_initial(c, g),
            StepOptions{c.full_newton, 30, 1e-13},
            c.delta_frac};
  return Setup{c, diff, dom, cp, lambda, std::move(rho), std::move(P)};
}

inline NashOptions nash_options(const ProblemConfig& c) { return {c.omega, c.tol_nash, c.max_nash}; }

}  // namespace snash

#endif  // SNASH_SETUP_HPP

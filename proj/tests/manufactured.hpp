#ifndef SNASH_TESTS_MANUFACTURED_HPP
#define SNASH_TESTS_MANUFACTURED_HPP

// Manufactured solutions y_k(x,t) = T_k(t) X(x), X = x^2 (1 - x), for the
// pulled-back linear system on l(t) = 1 + 0.2 t with a = x^0.5.

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "snash/pde_core.hpp"

namespace manufactured {

inline constexpr double alpha = 0.5;
inline const snash::Mat2 coupling{{{0.5, 0.3}, {0.5, 0.3}}};

inline snash::TransformedCoefficients coefficients() {
  return {snash::DegenerateDiffusion(alpha), snash::MovingDomain(1.0, snash::EllFamily::linear, 0.2, 0.2)};
}

inline double X(double x) { return x * x * (1 - x); }
inline double dX(double x) { return 2 * x - 3 * x * x; }
// (x^alpha X')'
inline double flux_div(double x) { return 2 * (alpha + 1) * std::pow(x, alpha) - 3 * (alpha + 2) * std::pow(x, alpha + 1); }

struct TimeProfile {
  double (*f)(double);
  double (*df)(double);
};

// Linear in time: implicit Euler reproduces it exactly, so only the spatial
// error remains.
inline const TimeProfile linear_profiles[2] = {{[](double t) { return 1 + t; }, [](double) { return 1.0; }},
                                               {[](double t) { return 1 - 0.5 * t; }, [](double) { return -0.5; }}};
inline const TimeProfile smooth_profiles[2] = {{[](double t) { return std::exp(-t); }, [](double t) { return -std::exp(-t); }},
                                               {[](double t) { return std::cos(3 * t); }, [](double t) { return -3 * std::sin(3 * t); }}};

// Discrete L2 norm over nodes in [0.1, 0.9], maximized over levels.
inline double interior_error(const snash::Grid& g, const snash::StatePair& y, const std::vector<std::vector<double>>& exact1,
                             const std::vector<std::vector<double>>& exact2) {
  double worst = 0.0;
  for (int n = 0; n <= g.n_t; ++n) {
    double s = 0.0;
    for (int j = 1; j <= g.n_x; ++j) {
      const double x = g.x(j);
      if (x < 0.1 - 1e-12 || x > 0.9 + 1e-12) continue;
      const double e1 = y.y1(n, j) - exact1[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
      const double e2 = y.y2(n, j) - exact2[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
      s += (e1 * e1 + e2 * e2) * g.dx();
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

// Spatial study: continuous operator applied to the exact solution.
inline double space_error(int n_x, int n_t) {
  const auto tc = coefficients();
  const snash::Grid g(n_x, n_t, 1.0);
  const auto& pr = linear_profiles;
  snash::StatePair y0(g), src(g);
  std::vector<std::vector<double>> e1(static_cast<std::size_t>(g.levels()), std::vector<double>(static_cast<std::size_t>(g.nodes()))),
      e2 = e1;
  for (int n = 0; n <= n_t; ++n) {
    const double t = g.t(n), b = tc.b(t), rate = tc.drift_rate(t);
    for (int j = 1; j <= n_x; ++j) {
      const double x = g.x(j);
      const double Ax = -b * flux_div(x) - rate * x * dX(x);
      const double u1 = pr[0].f(t) * X(x), u2 = pr[1].f(t) * X(x);
      e1[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] = u1;
      e2[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] = u2;
      src.y1(n, j) = pr[0].df(t) * X(x) + pr[0].f(t) * Ax + coupling[0][0] * u1 + coupling[0][1] * u2;
      src.y2(n, j) = pr[1].df(t) * X(x) + pr[1].f(t) * Ax + coupling[1][0] * u1 + coupling[1][1] * u2;
    }
  }
  for (int j = 1; j <= n_x; ++j) {
    y0.y1(0, j) = e1[0][static_cast<std::size_t>(j)];
    y0.y2(0, j) = e2[0][static_cast<std::size_t>(j)];
  }
  const auto y = snash::solve_forward(g, tc, snash::CouplingF::linear(coupling), y0, src);
  return interior_error(g, y, e1, e2);
}

// Temporal study: the source is built with an independently assembled
// spatial matrix, so the semi-discrete solution is exactly T_k(t) X(x_j).
inline double time_error(int n_x, int n_t) {
  const auto tc = coefficients();
  const snash::Grid g(n_x, n_t, 1.0);
  const auto& pr = smooth_profiles;
  snash::StatePair y0(g), src(g);
  std::vector<std::vector<double>> e1(static_cast<std::size_t>(g.levels()), std::vector<double>(static_cast<std::size_t>(g.nodes()))),
      e2 = e1;
  Eigen::VectorXd Xh(n_x);
  for (int j = 1; j <= n_x; ++j) Xh[j - 1] = X(g.x(j));
  for (int n = 0; n <= n_t; ++n) {
    const double t = g.t(n);
    const Eigen::VectorXd AX = oracle::diffusion_drift(alpha, n_x, tc.b(t), tc.drift_rate(t)) * Xh;
    for (int j = 1; j <= n_x; ++j) {
      const double u1 = pr[0].f(t) * Xh[j - 1], u2 = pr[1].f(t) * Xh[j - 1];
      e1[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] = u1;
      e2[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] = u2;
      src.y1(n, j) = pr[0].df(t) * Xh[j - 1] + pr[0].f(t) * AX[j - 1] + coupling[0][0] * u1 + coupling[0][1] * u2;
      src.y2(n, j) = pr[1].df(t) * Xh[j - 1] + pr[1].f(t) * AX[j - 1] + coupling[1][0] * u1 + coupling[1][1] * u2;
    }
  }
  for (int j = 1; j <= n_x; ++j) {
    y0.y1(0, j) = e1[0][static_cast<std::size_t>(j)];
    y0.y2(0, j) = e2[0][static_cast<std::size_t>(j)];
  }
  const auto y = snash::solve_forward(g, tc, snash::CouplingF::linear(coupling), y0, src);
  return interior_error(g, y, e1, e2);
}

// Observed orders log2(e_k / e_{k+1}) for successive halvings.
template <class F>
std::vector<double> observed_orders(F&& error_at, const std::vector<int>& sizes) {
  std::vector<double> e, out;
  for (int n : sizes) e.push_back(error_at(n));
  for (std::size_t k = 0; k + 1 < e.size(); ++k) out.push_back(std::log2(e[k] / e[k + 1]));
  return out;
}

}  // namespace manufactured

#endif  // SNASH_TESTS_MANUFACTURED_HPP

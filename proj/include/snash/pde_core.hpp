#ifndef SNASH_PDE_CORE_HPP
#define SNASH_PDE_CORE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "snash/coeffs_geometry.hpp"
#include "snash/coupling.hpp"
#include "snash/errors.hpp"
#include "snash/grid.hpp"

namespace snash {

// Tridiagonal matrix on the n_x interior nodes. lower[0] and upper[n_x-1]
// multiply Dirichlet zeros and are kept only for a uniform layout.
struct Tridiag {
  std::vector<double> lower, diag, upper;
  std::size_t size() const noexcept { return diag.size(); }
};

// Spatial operator of the state equation at time t:
//   (A u)_j = -b(t) [a_{j+1/2}(u_{j+1}-u_j) - a_{j-1/2}(u_j-u_{j-1})] / dx^2
//             - (l'/l) x_j (u_{j+1}-u_{j-1}) / (2 dx)
inline Tridiag assemble_operator(const TransformedCoefficients& tc, const Grid& g, double t) {
  const auto n = static_cast<std::size_t>(g.n_x);
  const double dx = g.dx(), b = tc.b(t), rate = tc.drift_rate(t);
  const auto& a = tc.diffusion();
  Tridiag A{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.x(static_cast<int>(i) + 1);
    const double am = a(x - 0.5 * dx), ap = a(x + 0.5 * dx);
    const double d = rate * x;
    A.lower[i] = -b * am / (dx * dx) + d / (2.0 * dx);
    A.diag[i] = b * (am + ap) / (dx * dx);
    A.upper[i] = -b * ap / (dx * dx) - d / (2.0 * dx);
  }
  return A;
}

// Spatial operator of the adjoint equations at time t, assembled from
//   -b(t) (a p_x)_x + (drift p)_x
// with the drift term as a centered difference of the product.
inline Tridiag assemble_adjoint_operator(const TransformedCoefficients& tc, const Grid& g, double t) {
  const auto n = static_cast<std::size_t>(g.n_x);
  const double dx = g.dx(), b = tc.b(t), rate = tc.drift_rate(t);
  const auto& a = tc.diffusion();
  Tridiag A{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const int j = static_cast<int>(i) + 1;
    const double x = g.x(j);
    const double am = a(x - 0.5 * dx), ap = a(x + 0.5 * dx);
    A.lower[i] = -b * am / (dx * dx) - rate * g.x(j - 1) / (2.0 * dx);
    A.diag[i] = b * (am + ap) / (dx * dx);
    A.upper[i] = -b * ap / (dx * dx) + rate * g.x(j + 1) / (2.0 * dx);
  }
  return A;
}

inline void apply(const Tridiag& A, std::span<const double> u, std::span<double> out) {
  const std::size_t n = A.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = A.diag[i] * u[i];
    if (i > 0) v += A.lower[i] * u[i - 1];
    if (i + 1 < n) v += A.upper[i] * u[i + 1];
    out[i] = v;
  }
}

namespace detail {

inline Mat2 inverse(const Mat2& m) {
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double scale = std::abs(m[0][0]) + std::abs(m[0][1]) + std::abs(m[1][0]) + std::abs(m[1][1]);
  if (!(std::abs(det) > 1e-14 * scale * scale)) throw SolverError("singular block in implicit step");
  return {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
}

inline Vec2 mul(const Mat2& m, const Vec2& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

inline Vec2 mul_t(const Mat2& m, const Vec2& v) {
  return {m[0][0] * v[0] + m[1][0] * v[1], m[0][1] * v[0] + m[1][1] * v[1]};
}

inline Mat2 transpose(const Mat2& m) { return {{{m[0][0], m[1][0]}, {m[0][1], m[1][1]}}}; }

}  // namespace detail

// Solves (I + dt (A (x) I_2) + dt J_j) z = rhs in place, J_j one 2x2 block per
// interior node. Block Thomas elimination; off-diagonal blocks are scalar.
inline void solve_coupled_step(const Tridiag& A, double dt, std::span<const Mat2> J, std::span<Vec2> rhs) {
  const std::size_t n = A.size();
  std::vector<Mat2> cprime(n);
  std::vector<Vec2> dprime(n);
  for (std::size_t i = 0; i < n; ++i) {
    Mat2 M{{{1.0 + dt * A.diag[i] + dt * J[i][0][0], dt * J[i][0][1]},
            {dt * J[i][1][0], 1.0 + dt * A.diag[i] + dt * J[i][1][1]}}};
    Vec2 r = rhs[i];
    if (i > 0) {
      const double l = dt * A.lower[i];
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) M[p][q] -= l * cprime[i - 1][p][q];
      r[0] -= l * dprime[i - 1][0];
      r[1] -= l * dprime[i - 1][1];
    }
    const Mat2 Minv = detail::inverse(M);
    const double u = i + 1 < n ? dt * A.upper[i] : 0.0;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) cprime[i][p][q] = Minv[p][q] * u;
    dprime[i] = detail::mul(Minv, r);
  }
  rhs[n - 1] = dprime[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    const Vec2 next = rhs[i + 1];
    const Vec2 c = detail::mul(cprime[i], next);
    rhs[i] = {dprime[i][0] - c[0], dprime[i][1] - c[1]};
  }
}

struct StepOptions {
  bool full_newton = false;  // iterate Newton to convergence at each level
  int max_inner = 30;
  double tol_inner = 1e-13;
};

// Linearization of the time-stepping scheme along a trajectory. For level
// n >= 1 the step matrix is I + dt A_n + dt step_jacobian(n); the coupling
// to the previous level is -I + dt cross(n-1).
//   one Newton step: step_jacobian(n) = DF(y^{n-1}),
//                    cross(n) = D^2F(y^n)[y^{n+1} - y^n]
//   full Newton:     step_jacobian(n) = DF(y^n), cross = 0
class Linearization {
public:
  static Linearization constant(const Grid& g, const Mat2& c) {
    Linearization L(g);
    std::fill(L.jac_.begin(), L.jac_.end(), c);
    return L;
  }

  static Linearization along(const Grid& g, const CouplingF& F, const StatePair& y, const StepOptions& opt) {
    Linearization L(g);
    const int nx = g.n_x;
    for (int n = 0; n <= g.n_t; ++n) {
      const int src = (opt.full_newton || n == 0) ? n : n - 1;
      for (int j = 1; j <= nx; ++j) L.jac_[L.idx(n, j)] = F.jacobian(y.y1(src, j), y.y2(src, j));
    }
    if (!opt.full_newton && !F.is_linear()) {
      for (int n = 0; n < g.n_t; ++n) {
        for (int j = 1; j <= nx; ++j) {
          const double a1 = y.y1(n, j), a2 = y.y2(n, j);
          const Vec2 d{y.y1(n + 1, j) - a1, y.y2(n + 1, j) - a2};
          Mat2 K{};
          for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
              for (int m = 0; m < 2; ++m) K[i][k] += F.hessian(i, m, k, a1, a2) * d[static_cast<std::size_t>(m)];
          L.cross_[L.idx(n, j)] = K;
        }
      }
    }
    return L;
  }

  const Mat2& step_jacobian(int n, int j) const { return jac_[idx(n, j)]; }
  const Mat2& cross(int n, int j) const { return cross_[idx(n, j)]; }
  std::span<const Mat2> step_jacobians(int n) const {
    return {jac_.data() + idx(n, 1), static_cast<std::size_t>(nx_)};
  }

private:
  explicit Linearization(const Grid& g)
      : nx_(g.n_x), jac_(static_cast<std::size_t>(g.levels() * g.n_x)), cross_(jac_.size(), Mat2{}) {}
  std::size_t idx(int n, int j) const { return static_cast<std::size_t>(n * nx_ + (j - 1)); }
  int nx_;
  std::vector<Mat2> jac_;
  std::vector<Mat2> cross_;
};

namespace detail {
inline std::vector<Vec2> interior(const StatePair& s, int n, int nx) {
  std::vector<Vec2> v(static_cast<std::size_t>(nx));
  for (int j = 1; j <= nx; ++j) v[static_cast<std::size_t>(j - 1)] = {s.y1(n, j), s.y2(n, j)};
  return v;
}
inline void store(StatePair& s, int n, std::span<const Vec2> v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    s.y1(n, static_cast<int>(i) + 1) = v[i][0];
    s.y2(n, static_cast<int>(i) + 1) = v[i][1];
  }
}
}  // namespace detail

// Forward solve of
//   y_t + A(t) y + F(y) = S,  y(0) = initial level of `y0`, Dirichlet zeros,
// by implicit Euler. `sources` level n is the right-hand side at t_n.
inline StatePair solve_forward(const Grid& g, const TransformedCoefficients& tc, const CouplingF& F,
                               const StatePair& y0, const StatePair& sources, const StepOptions& opt = {}) {
  StatePair y(g);
  const int nx = g.n_x;
  const double dt = g.dt();
  for (int j = 1; j <= nx; ++j) {
    y.y1(0, j) = y0.y1(0, j);
    y.y2(0, j) = y0.y2(0, j);
  }
  std::vector<Mat2> J(static_cast<std::size_t>(nx));
  std::vector<Vec2> rhs(static_cast<std::size_t>(nx));
  for (int n = 1; n <= g.n_t; ++n) {
    const Tridiag A = assemble_operator(tc, g, g.t(n));
    // One Newton step from y^{n-1}.
    for (int j = 1; j <= nx; ++j) {
      const auto i = static_cast<std::size_t>(j - 1);
      const double a1 = y.y1(n - 1, j), a2 = y.y2(n - 1, j);
      J[i] = F.jacobian(a1, a2);
      const Vec2 f = F.value(a1, a2);
      const Vec2 Jy = detail::mul(J[i], {a1, a2});
      rhs[i] = {a1 + dt * (Jy[0] - f[0] + sources.y1(n, j)), a2 + dt * (Jy[1] - f[1] + sources.y2(n, j))};
    }
    solve_coupled_step(A, dt, J, rhs);
    detail::store(y, n, rhs);
    if (!opt.full_newton || F.is_linear()) continue;

    // Newton on R(z) = z - y^{n-1} + dt A z + dt F(z) - dt S.
    std::vector<double> z1(static_cast<std::size_t>(nx)), z2(z1.size()), Az1(z1.size()), Az2(z1.size());
    int it = 0;
    for (;; ++it) {
      for (int j = 1; j <= nx; ++j) {
        z1[static_cast<std::size_t>(j - 1)] = y.y1(n, j);
        z2[static_cast<std::size_t>(j - 1)] = y.y2(n, j);
      }
      apply(A, z1, Az1);
      apply(A, z2, Az2);
      double res = 0.0, scale = 0.0;
      for (int j = 1; j <= nx; ++j) {
        const auto i = static_cast<std::size_t>(j - 1);
        const Vec2 f = F.value(z1[i], z2[i]);
        J[i] = F.jacobian(z1[i], z2[i]);
        rhs[i] = {-(z1[i] - y.y1(n - 1, j) + dt * (Az1[i] + f[0] - sources.y1(n, j))),
                  -(z2[i] - y.y2(n - 1, j) + dt * (Az2[i] + f[1] - sources.y2(n, j)))};
        res = std::max({res, std::abs(rhs[i][0]), std::abs(rhs[i][1])});
        scale = std::max({scale, std::abs(z1[i]), std::abs(z2[i])});
      }
      if (res <= opt.tol_inner * (1.0 + scale)) break;
      if (it >= opt.max_inner)
        throw SolverError("Newton iteration did not converge at level " + std::to_string(n) +
                          ", residual " + std::to_string(res), {res});
      solve_coupled_step(A, dt, J, rhs);
      for (int j = 1; j <= nx; ++j) {
        y.y1(n, j) += rhs[static_cast<std::size_t>(j - 1)][0];
        y.y2(n, j) += rhs[static_cast<std::size_t>(j - 1)][1];
      }
    }
  }
  return y;
}

// Linear tangent of the discrete forward map:
//   (I + dt A_n + dt J_n) w^n = (I - dt K_{n-1}) w^{n-1} + dt S^n,
// with w^0 from the initial level of `w0`.
inline StatePair solve_tangent(const Grid& g, const TransformedCoefficients& tc, const Linearization& lin,
                               const StatePair& w0, const StatePair& sources) {
  StatePair w(g);
  const int nx = g.n_x;
  const double dt = g.dt();
  for (int j = 1; j <= nx; ++j) {
    w.y1(0, j) = w0.y1(0, j);
    w.y2(0, j) = w0.y2(0, j);
  }
  std::vector<Vec2> rhs(static_cast<std::size_t>(nx));
  for (int n = 1; n <= g.n_t; ++n) {
    const Tridiag A = assemble_operator(tc, g, g.t(n));
    for (int j = 1; j <= nx; ++j) {
      const Vec2 prev{w.y1(n - 1, j), w.y2(n - 1, j)};
      const Vec2 k = detail::mul(lin.cross(n - 1, j), prev);
      rhs[static_cast<std::size_t>(j - 1)] = {prev[0] - dt * k[0] + dt * sources.y1(n, j),
                                              prev[1] - dt * k[1] + dt * sources.y2(n, j)};
    }
    solve_coupled_step(A, dt, lin.step_jacobians(n), rhs);
    detail::store(w, n, rhs);
  }
  return w;
}

// Backward solve of the discrete adjoint of the forward scheme:
//   (I + dt A*_n + dt J_n^T) p^n = (I - dt K_n^T) p^{n+1} + dt G^n,   n = n_t..1,
// with p^{n_t+1} = terminal (interior nodes; zero when empty) and K_{n_t} = 0. A* is the
// adjoint operator -b (a p_x)_x + (drift p)_x, i.e. the exact transpose of A.
// Level 0 is filled by one more step of the same recursion.
inline StatePair solve_adjoint(const Grid& g, const TransformedCoefficients& tc, const Linearization& lin,
                               const StatePair& sources, std::span<const Vec2> terminal = {}) {
  StatePair p(g);
  const int nx = g.n_x;
  const double dt = g.dt();
  std::vector<Vec2> next(static_cast<std::size_t>(nx), Vec2{0.0, 0.0});
  if (!terminal.empty()) {
    if (terminal.size() != next.size()) throw DomainError("terminal data size does not match the grid");
    std::copy(terminal.begin(), terminal.end(), next.begin());
  }
  std::vector<Mat2> JT(static_cast<std::size_t>(nx));
  std::vector<Vec2> rhs(static_cast<std::size_t>(nx));
  for (int n = g.n_t; n >= 0; --n) {
    const Tridiag A = assemble_adjoint_operator(tc, g, g.t(n));
    for (int j = 1; j <= nx; ++j) {
      const auto i = static_cast<std::size_t>(j - 1);
      JT[i] = detail::transpose(lin.step_jacobian(n, j));
      Vec2 k{0.0, 0.0};
      if (n < g.n_t) k = detail::mul_t(lin.cross(n, j), next[i]);
      rhs[i] = {next[i][0] - dt * k[0] + dt * sources.y1(n, j), next[i][1] - dt * k[1] + dt * sources.y2(n, j)};
    }
    solve_coupled_step(A, dt, JT, rhs);
    detail::store(p, n, rhs);
    next = rhs;
  }
  return p;
}

// Convenience: zero-source, zero-initial-data pair on a grid.
inline StatePair zero_pair(const Grid& g) { return StatePair(g); }

}  // namespace snash

#endif  // SNASH_PDE_CORE_HPP

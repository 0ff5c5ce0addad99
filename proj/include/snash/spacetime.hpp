#ifndef SNASH_SPACETIME_HPP
#define SNASH_SPACETIME_HPP

// Space-time views of the implicit scheme: the forward residual operator and
// its discrete adjoint, matrix-free and as assembled sparse matrices. Unknowns
// are the interior values at levels 1..n_t.

#include <vector>

#include <Eigen/SparseCore>

#include "snash/pde_core.hpp"

namespace snash {

inline Eigen::Index spacetime_index(const Grid& g, int n, int j, int comp) {
  return (static_cast<Eigen::Index>(n - 1) * g.n_x + (j - 1)) * 2 + comp;
}

inline Eigen::Index spacetime_size(const Grid& g) { return static_cast<Eigen::Index>(g.n_t) * g.n_x * 2; }

// r^n = (I + dt A_n + dt J_n) w^n - (I - dt K_{n-1}) w^{n-1}, with w^0 = 0.
inline StatePair apply_forward_operator(const Grid& g, const TransformedCoefficients& tc, const Linearization& lin,
                                        const StatePair& w) {
  StatePair r(g);
  const int nx = g.n_x;
  const double dt = g.dt();
  std::vector<double> a1(static_cast<std::size_t>(nx)), a2(a1.size()), u1(a1.size()), u2(a1.size());
  for (int n = 1; n <= g.n_t; ++n) {
    const Tridiag A = assemble_operator(tc, g, g.t(n));
    for (int j = 1; j <= nx; ++j) {
      u1[static_cast<std::size_t>(j - 1)] = w.y1(n, j);
      u2[static_cast<std::size_t>(j - 1)] = w.y2(n, j);
    }
    apply(A, u1, a1);
    apply(A, u2, a2);
    for (int j = 1; j <= nx; ++j) {
      const auto i = static_cast<std::size_t>(j - 1);
      const Vec2 cur{u1[i], u2[i]};
      const Vec2 jw = detail::mul(lin.step_jacobian(n, j), cur);
      Vec2 prev{0.0, 0.0}, kp{0.0, 0.0};
      if (n > 1) {
        prev = {w.y1(n - 1, j), w.y2(n - 1, j)};
        kp = detail::mul(lin.cross(n - 1, j), prev);
      }
      r.y1(n, j) = cur[0] + dt * (a1[i] + jw[0]) - (prev[0] - dt * kp[0]);
      r.y2(n, j) = cur[1] + dt * (a2[i] + jw[1]) - (prev[1] - dt * kp[1]);
    }
  }
  return r;
}

// r^n = (I + dt A*_n + dt J_n^T) p^n - (I - dt K_n^T) p^{n+1}, with p^{n_t+1} = 0.
inline StatePair apply_backward_operator(const Grid& g, const TransformedCoefficients& tc, const Linearization& lin,
                                         const StatePair& p) {
  StatePair r(g);
  const int nx = g.n_x;
  const double dt = g.dt();
  std::vector<double> a1(static_cast<std::size_t>(nx)), a2(a1.size()), u1(a1.size()), u2(a1.size());
  for (int n = 1; n <= g.n_t; ++n) {
    const Tridiag A = assemble_adjoint_operator(tc, g, g.t(n));
    for (int j = 1; j <= nx; ++j) {
      u1[static_cast<std::size_t>(j - 1)] = p.y1(n, j);
      u2[static_cast<std::size_t>(j - 1)] = p.y2(n, j);
    }
    apply(A, u1, a1);
    apply(A, u2, a2);
    for (int j = 1; j <= nx; ++j) {
      const auto i = static_cast<std::size_t>(j - 1);
      const Vec2 cur{u1[i], u2[i]};
      const Vec2 jp = detail::mul_t(lin.step_jacobian(n, j), cur);
      Vec2 next{0.0, 0.0}, kn{0.0, 0.0};
      if (n < g.n_t) {
        next = {p.y1(n + 1, j), p.y2(n + 1, j)};
        kn = detail::mul_t(lin.cross(n, j), next);
      }
      r.y1(n, j) = cur[0] + dt * (a1[i] + jp[0]) - (next[0] - dt * kn[0]);
      r.y2(n, j) = cur[1] + dt * (a2[i] + jp[1]) - (next[1] - dt * kn[1]);
    }
  }
  return r;
}

// Euclidean pairing over interior nodes of levels 1..n_t.
inline double spacetime_dot(const Grid& g, const StatePair& u, const StatePair& v) {
  double s = 0.0;
  for (int n = 1; n <= g.n_t; ++n)
    for (int j = 1; j <= g.n_x; ++j) s += u.y1(n, j) * v.y1(n, j) + u.y2(n, j) * v.y2(n, j);
  return s;
}

namespace detail {
inline void push_block(std::vector<Eigen::Triplet<double>>& trip, Eigen::Index r0, Eigen::Index c0, const Mat2& m) {
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      if (m[p][q] != 0.0) trip.emplace_back(r0 + p, c0 + q, m[p][q]);
}
}  // namespace detail

inline Eigen::SparseMatrix<double> assemble_forward_matrix(const Grid& g, const TransformedCoefficients& tc,
                                                           const Linearization& lin) {
  std::vector<Eigen::Triplet<double>> trip;
  const double dt = g.dt();
  for (int n = 1; n <= g.n_t; ++n) {
    const Tridiag A = assemble_operator(tc, g, g.t(n));
    for (int j = 1; j <= g.n_x; ++j) {
      const auto i = static_cast<std::size_t>(j - 1);
      const Eigen::Index r = spacetime_index(g, n, j, 0);
      const Mat2& J = lin.step_jacobian(n, j);
      detail::push_block(trip, r, r, {{{1.0 + dt * (A.diag[i] + J[0][0]), dt * J[0][1]},
                                       {dt * J[1][0], 1.0 + dt * (A.diag[i] + J[1][1])}}});
      if (j > 1) detail::push_block(trip, r, spacetime_index(g, n, j - 1, 0), {{{dt * A.lower[i], 0}, {0, dt * A.lower[i]}}});
      if (j < g.n_x) detail::push_block(trip, r, spacetime_index(g, n, j + 1, 0), {{{dt * A.upper[i], 0}, {0, dt * A.upper[i]}}});
      if (n > 1) {
        const Mat2& K = lin.cross(n - 1, j);
        detail::push_block(trip, r, spacetime_index(g, n - 1, j, 0),
                           {{{-1.0 + dt * K[0][0], dt * K[0][1]}, {dt * K[1][0], -1.0 + dt * K[1][1]}}});
      }
    }
  }
  const Eigen::Index N = spacetime_size(g);
  Eigen::SparseMatrix<double> M(N, N);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

inline Eigen::SparseMatrix<double> assemble_backward_matrix(const Grid& g, const TransformedCoefficients& tc,
                                                            const Linearization& lin) {
  std::vector<Eigen::Triplet<double>> trip;
  const double dt = g.dt();
  for (int n = 1; n <= g.n_t; ++n) {
    const Tridiag A = assemble_adjoint_operator(tc, g, g.t(n));
    for (int j = 1; j <= g.n_x; ++j) {
      const auto i = static_cast<std::size_t>(j - 1);
      const Eigen::Index r = spacetime_index(g, n, j, 0);
      const Mat2& J = lin.step_jacobian(n, j);
      detail::push_block(trip, r, r, {{{1.0 + dt * (A.diag[i] + J[0][0]), dt * J[1][0]},
                                       {dt * J[0][1], 1.0 + dt * (A.diag[i] + J[1][1])}}});
      if (j > 1) detail::push_block(trip, r, spacetime_index(g, n, j - 1, 0), {{{dt * A.lower[i], 0}, {0, dt * A.lower[i]}}});
      if (j < g.n_x) detail::push_block(trip, r, spacetime_index(g, n, j + 1, 0), {{{dt * A.upper[i], 0}, {0, dt * A.upper[i]}}});
      if (n < g.n_t) {
        const Mat2& K = lin.cross(n, j);
        detail::push_block(trip, r, spacetime_index(g, n + 1, j, 0),
                           {{{-1.0 + dt * K[0][0], dt * K[1][0]}, {dt * K[0][1], -1.0 + dt * K[1][1]}}});
      }
    }
  }
  const Eigen::Index N = spacetime_size(g);
  Eigen::SparseMatrix<double> M(N, N);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

}  // namespace snash

#endif  // SNASH_SPACETIME_HPP

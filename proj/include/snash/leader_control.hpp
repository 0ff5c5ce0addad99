#ifndef SNASH_LEADER_CONTROL_HPP
#define SNASH_LEADER_CONTROL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "snash/nash_solver.hpp"

namespace snash {

// Sources of the linearized optimality system: `y` enters the state rows,
// `p[i]` the adjoint rows of follower i. Both are rates (multiplied by dt).
struct LinearSources {
  StatePair y;
  std::array<StatePair, 2> p;
  LinearSources() = default;
  explicit LinearSources(const Grid& g) : y(g), p{StatePair(g), StatePair(g)} {}
};

struct OptimalitySolution {
  StatePair y;
  AdjointQuad p;
};

// The linearized optimality system with the follower feedback substituted,
// as one sparse matrix over levels 1..n_t. Per node the six unknowns are
// (y1, y2, p^1_1, p^1_2, p^2_1, p^2_2). State rows:
//   (I + dt A_n + dt c) y^n - y^{n-1} + dt sum_i (1/mu_i) r^n [O_i] p^{i,n}_1 = dt (S_y + h [O]) (+ y^0 at n = 1)
// adjoint rows of follower i:
//   (I + dt A*_n + dt c^T) p^{i,n} - p^{i,n+1} - alpha_i w^n y^n = dt S_p - alpha_i w^n y_d^i
// with r = rho_star^{-2} on active levels and w the tracking quadrature
// weight divided by dx.
class OptimalitySystem {
public:
  static constexpr int block = 6;

  OptimalitySystem(const Problem& P, const Mat2& c) : P_(P), c_(c) {
    assemble();
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(K_);
    lu_->factorize(K_);
    if (lu_->info() != Eigen::Success) throw SolverError("sparse factorization of the optimality system failed", {});
  }

  const Problem& problem() const noexcept { return P_; }
  const Mat2& c() const noexcept { return c_; }
  const Eigen::SparseMatrix<double>& matrix() const noexcept { return K_; }
  Eigen::Index size() const noexcept { return K_.rows(); }

  Eigen::Index index(int n, int j, int comp) const {
    return (static_cast<Eigen::Index>(n - 1) * P_.grid.n_x + (j - 1)) * block + comp;
  }

  // Right-hand side from initial data, targets and sources (h excluded).
  Eigen::VectorXd data_rhs(const LinearSources* src) const {
    const Grid& g = P_.grid;
    const double dt = g.dt();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(size());
    for (int j = 1; j <= g.n_x; ++j) {
      b[index(1, j, 0)] += P_.initial.y1(0, j);
      b[index(1, j, 1)] += P_.initial.y2(0, j);
    }
    for (int i = 0; i < 2; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const double alpha = P_.followers.alpha[ii];
      const Vec2 yd = P_.followers.target[ii];
      for (int n = 1; n <= g.n_t; ++n)
        for (int j = 1; j <= g.n_x; ++j) {
          const double w = omega(n, j);
          if (w == 0.0) continue;
          b[index(n, j, 2 + 2 * i)] -= alpha * w * yd[0];
          b[index(n, j, 3 + 2 * i)] -= alpha * w * yd[1];
        }
    }
    if (src != nullptr) {
      for (int n = 1; n <= g.n_t; ++n)
        for (int j = 1; j <= g.n_x; ++j) {
          b[index(n, j, 0)] += dt * src->y.y1(n, j);
          b[index(n, j, 1)] += dt * src->y.y2(n, j);
          for (int i = 0; i < 2; ++i) {
            b[index(n, j, 2 + 2 * i)] += dt * src->p[static_cast<std::size_t>(i)].y1(n, j);
            b[index(n, j, 3 + 2 * i)] += dt * src->p[static_cast<std::size_t>(i)].y2(n, j);
          }
        }
    }
    return b;
  }

  void add_leader(Eigen::VectorXd& b, const Field& h) const {
    const Grid& g = P_.grid;
    const Mask o = P_.leader_mask();
    for (int n = 1; n <= g.n_t; ++n)
      for (int j = o.j_lo; j <= o.j_hi; ++j) b[index(n, j, 0)] += g.dt() * h(n, j);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd z = lu_->solve(b);
    if (lu_->info() != Eigen::Success) throw SolverError("optimality system solve failed", {});
    return z;
  }

  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& b) const {
    Eigen::VectorXd z = lu_->transpose().solve(b);
    return z;
  }

  OptimalitySolution unpack(const Eigen::VectorXd& z) const {
    const Grid& g = P_.grid;
    OptimalitySolution s{StatePair(g), AdjointQuad(g)};
    for (int j = 1; j <= g.n_x; ++j) {
      s.y.y1(0, j) = P_.initial.y1(0, j);
      s.y.y2(0, j) = P_.initial.y2(0, j);
    }
    for (int n = 1; n <= g.n_t; ++n)
      for (int j = 1; j <= g.n_x; ++j) {
        s.y.y1(n, j) = z[index(n, j, 0)];
        s.y.y2(n, j) = z[index(n, j, 1)];
        for (int i = 0; i < 2; ++i) {
          s.p.p[i].y1(n, j) = z[index(n, j, 2 + 2 * i)];
          s.p.p[i].y2(n, j) = z[index(n, j, 3 + 2 * i)];
        }
      }
    return s;
  }

  // Follower controls encoded in a solution.
  std::array<Field, 2> follower_controls(const OptimalitySolution& s) const {
    return follower_controls_from_adjoint(s.p, P_);
  }

  double omega(int n, int j) const {
    return quad_.time[static_cast<std::size_t>(n)] * quad_.space[static_cast<std::size_t>(j)] / P_.grid.dx();
  }

private:
  void assemble() {
    const Grid& g = P_.grid;
    const int nx = g.n_x;
    const double dt = g.dt();
    quad_ = tracking_quadrature(g, P_.observation_mask(), P_.delta_frac);
    const std::array<Mask, 2> oi{P_.follower_mask(0), P_.follower_mask(1)};
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(g.n_t) * static_cast<std::size_t>(nx) * 40);
    auto put = [&](Eigen::Index r, Eigen::Index col, double v) {
      if (v != 0.0) trip.emplace_back(r, col, v);
    };
    for (int n = 1; n <= g.n_t; ++n) {
      const Tridiag A = assemble_operator(P_.tc, g, g.t(n));
      const Tridiag As = assemble_adjoint_operator(P_.tc, g, g.t(n));
      const double r = P_.rho.rho_star_inv2[static_cast<std::size_t>(n)];
      for (int j = 1; j <= nx; ++j) {
        const auto k = static_cast<std::size_t>(j - 1);
        // state rows
        for (int a = 0; a < 2; ++a) {
          const Eigen::Index row = index(n, j, a);
          for (int b = 0; b < 2; ++b) put(row, index(n, j, b), (a == b ? 1.0 + dt * A.diag[k] : 0.0) + dt * c_[a][b]);
          if (j > 1) put(row, index(n, j - 1, a), dt * A.lower[k]);
          if (j < nx) put(row, index(n, j + 1, a), dt * A.upper[k]);
          if (n > 1) put(row, index(n - 1, j, a), -1.0);
        }
        for (int i = 0; i < 2; ++i)
          if (oi[static_cast<std::size_t>(i)].contains(j))
            put(index(n, j, 0), index(n, j, 2 + 2 * i), dt * r / P_.followers.mu[static_cast<std::size_t>(i)]);
        // adjoint rows
        const double w = omega(n, j);
        for (int i = 0; i < 2; ++i) {
          const int base = 2 + 2 * i;
          const double alpha = P_.followers.alpha[static_cast<std::size_t>(i)];
          for (int a = 0; a < 2; ++a) {
            const Eigen::Index row = index(n, j, base + a);
            for (int b = 0; b < 2; ++b)
              put(row, index(n, j, base + b), (a == b ? 1.0 + dt * As.diag[k] : 0.0) + dt * c_[b][a]);
            if (j > 1) put(row, index(n, j - 1, base + a), dt * As.lower[k]);
            if (j < nx) put(row, index(n, j + 1, base + a), dt * As.upper[k]);
            if (n < g.n_t) put(row, index(n + 1, j, base + a), -1.0);
            put(row, index(n, j, a), -alpha * w);
          }
        }
      }
    }
    const Eigen::Index N = static_cast<Eigen::Index>(g.n_t) * nx * block;
    K_.resize(N, N);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();
  }

  const Problem& P_;
  Mat2 c_;
  TrackingQuadrature quad_;
  Eigen::SparseMatrix<double> K_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
};

struct ControlOptions {
  double eps_pen = 1e-8;
  double tol_cg = 1e-10;
  int max_cg = 500;
  double tol_outer = 1e-8;
  int max_outer = 50;
};

struct ControlResult {
  Field h;
  std::array<Field, 2> v;
  StatePair y;
  AdjointQuad p;
  LinearSources sources;          // sources of the last linear solve
  double terminal_norm = 0.0;     // of `y` at level n_t
  double linear_terminal_norm = 0.0;
  double control_cost = 0.0;      // sum dt dx rho1^2 h^2 over the support
  std::vector<double> phi_history;
  std::vector<double> cg_residuals;
  std::vector<double> outer_updates;
  int cg_iterations = 0;
  int outer_iterations = 0;
};

inline double terminal_norm(const StatePair& y, const Grid& g) {
  return std::sqrt(l2_norm_sq(y.y1.level(g.n_t), g.dx()) + l2_norm_sq(y.y2.level(g.n_t), g.dx()));
}

// Penalized leader problem in the scaled variable g = rho1 h, supported on
// O x active levels:
//   Phi(g) = 1/2 sum dt dx g^2 + 1/(2 eps) |y(T)|^2.
// Phi is quadratic; its gradient in the dt dx inner product is
//   g + (1/eps) rho1^{-1} lambda_1 [O],  lambda = K^{-T} E^T y(T),
// where lambda is the backward/forward (phi, psi) system with terminal data y(T).
class LeaderFunctional {
public:
  LeaderFunctional(const OptimalitySystem& K, const LinearSources* src, double eps_pen)
      : K_(K), eps_(eps_pen), base_(K.data_rhs(src)) {
    const Problem& P = K.problem();
    mask_ = P.leader_mask();
    z0_ = K.solve(base_);
    yT0_ = terminal(z0_);
    (void)P;
  }

  const Grid& grid() const { return K_.problem().grid; }

  Field zero() const { return Field(grid()); }

  Field leader_from_scaled(const Field& gs) const {
    Field h(grid());
    const auto& inv = K_.problem().rho.rho1_inv;
    for (int n = 1; n <= grid().n_t; ++n)
      for (int j = mask_.j_lo; j <= mask_.j_hi; ++j) h(n, j) = inv[static_cast<std::size_t>(n)] * gs(n, j);
    return h;
  }

  // Terminal state of the homogeneous part for scaled control g.
  Eigen::VectorXd terminal_of(const Field& gs) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(K_.size());
    K_.add_leader(b, leader_from_scaled(gs));
    return terminal(K_.solve(b));
  }

  const Eigen::VectorXd& free_terminal() const noexcept { return yT0_; }

  // (1/eps) rho1^{-1} lambda_1 on the support, for terminal data `yT`.
  Field terminal_adjoint(const Eigen::VectorXd& yT) const {
    const Grid& g = grid();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(K_.size());
    for (int j = 1; j <= g.n_x; ++j) {
      e[K_.index(g.n_t, j, 0)] = yT[2 * (j - 1)];
      e[K_.index(g.n_t, j, 1)] = yT[2 * (j - 1) + 1];
    }
    const Eigen::VectorXd lam = K_.solve_transpose(e);
    Field out(g);
    const auto& inv = K_.problem().rho.rho1_inv;
    for (int n = 1; n <= g.n_t; ++n) {
      const double r = inv[static_cast<std::size_t>(n)];
      if (r == 0.0) continue;
      for (int j = mask_.j_lo; j <= mask_.j_hi; ++j) out(n, j) = r * lam[K_.index(n, j, 0)] / eps_;
    }
    return out;
  }

  double dot(const Field& a, const Field& b) const {
    double s = 0.0;
    for (int n = 1; n <= grid().n_t; ++n)
      for (int j = mask_.j_lo; j <= mask_.j_hi; ++j) s += a(n, j) * b(n, j);
    return s * grid().dt() * grid().dx();
  }

  double terminal_sq(const Eigen::VectorXd& yT) const { return yT.squaredNorm() * grid().dx(); }

  double value(const Field& gs) const {
    const Eigen::VectorXd yT = yT0_ + terminal_of(gs);
    return 0.5 * dot(gs, gs) + 0.5 * terminal_sq(yT) / eps_;
  }

  Field gradient(const Field& gs) const {
    const Eigen::VectorXd yT = yT0_ + terminal_of(gs);
    Field gr = terminal_adjoint(yT);
    add(gr, gs, 1.0);
    return gr;
  }

  // H d = d + (1/eps) G^* G d
  Field hessian_apply(const Field& d, Eigen::VectorXd& Gd) const {
    Gd = terminal_of(d);
    Field out = terminal_adjoint(Gd);
    add(out, d, 1.0);
    return out;
  }

  static void add(Field& a, const Field& b, double s) {
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t k = 0; k < va.size(); ++k) va[k] += s * vb[k];
  }

  double eps() const noexcept { return eps_; }
  const Eigen::VectorXd& base_rhs() const noexcept { return base_; }

private:
  Eigen::VectorXd terminal(const Eigen::VectorXd& z) const {
    const Grid& g = grid();
    Eigen::VectorXd t(2 * g.n_x);
    for (int j = 1; j <= g.n_x; ++j) {
      t[2 * (j - 1)] = z[K_.index(g.n_t, j, 0)];
      t[2 * (j - 1) + 1] = z[K_.index(g.n_t, j, 1)];
    }
    return t;
  }

  const OptimalitySystem& K_;
  double eps_;
  Eigen::VectorXd base_;
  Eigen::VectorXd z0_;
  Eigen::VectorXd yT0_;
  Mask mask_;
};

// Conjugate gradient on H g = -(1/eps) G^* yT0 in the dt dx inner product.
inline ControlResult solve_linearized_control(const OptimalitySystem& K, const LinearSources* src,
                                              const ControlOptions& opt) {
  const Problem& P = K.problem();
  const Grid& g = P.grid;
  LeaderFunctional Phi(K, src, opt.eps_pen);
  ControlResult R;

  Field gs = Phi.zero();
  Eigen::VectorXd yT = Phi.free_terminal();
  Field r = Phi.terminal_adjoint(yT);  // gradient at 0
  for (double& v : r.values()) v = -v;
  const double b_norm = std::sqrt(Phi.dot(r, r));
  R.phi_history.push_back(0.5 * Phi.terminal_sq(yT) / opt.eps_pen);
  R.cg_residuals.push_back(b_norm == 0.0 ? 0.0 : 1.0);
  if (b_norm > 0.0) {
    Field d = r;
    double rr = Phi.dot(r, r);
    bool done = false;
    for (int k = 1; k <= opt.max_cg; ++k) {
      Eigen::VectorXd Gd;
      const Field Hd = Phi.hessian_apply(d, Gd);
      const double dHd = Phi.dot(d, Hd);
      if (!(dHd > 0.0)) throw SolverError("conjugate gradient lost positivity", R.cg_residuals);
      const double step = rr / dHd;
      LeaderFunctional::add(gs, d, step);
      yT += step * Gd;
      LeaderFunctional::add(r, Hd, -step);
      const double rr_new = Phi.dot(r, r);
      R.cg_iterations = k;
      R.cg_residuals.push_back(std::sqrt(rr_new) / b_norm);
      R.phi_history.push_back(0.5 * Phi.dot(gs, gs) + 0.5 * Phi.terminal_sq(yT) / opt.eps_pen);
      if (std::sqrt(rr_new) <= opt.tol_cg * b_norm) {
        done = true;
        break;
      }
      const double beta = rr_new / rr;
      rr = rr_new;
      auto vd = d.values();
      auto vr = r.values();
      for (std::size_t m = 0; m < vd.size(); ++m) vd[m] = vr[m] + beta * vd[m];
    }
    if (!done) throw SolverError("conjugate gradient stagnated", R.cg_residuals);
  }

  R.h = Phi.leader_from_scaled(gs);
  R.control_cost = Phi.dot(gs, gs);
  Eigen::VectorXd b = Phi.base_rhs();
  K.add_leader(b, R.h);
  const OptimalitySolution sol = K.unpack(K.solve(b));
  R.y = sol.y;
  R.p = sol.p;
  R.v = K.follower_controls(sol);
  R.terminal_norm = terminal_norm(R.y, g);
  R.linear_terminal_norm = R.terminal_norm;
  if (src != nullptr) R.sources = *src;
  else R.sources = LinearSources(g);
  R.outer_iterations = 0;
  return R;
}

// Semilinear remainders around the linearization c:
//   state rows  -(F(y) - c y),  adjoint rows  -(DF(y) - c)^T p^i.
inline LinearSources semilinear_remainders(const Problem& P, const Mat2& c, const StatePair& y, const AdjointQuad& p,
                                           const LinearSources* base) {
  const Grid& g = P.grid;
  LinearSources s = base != nullptr ? *base : LinearSources(g);
  for (int n = 1; n <= g.n_t; ++n)
    for (int j = 1; j <= g.n_x; ++j) {
      const double y1 = y.y1(n, j), y2 = y.y2(n, j);
      const Vec2 f = P.F.value(y1, y2);
      s.y.y1(n, j) -= f[0] - (c[0][0] * y1 + c[0][1] * y2);
      s.y.y2(n, j) -= f[1] - (c[1][0] * y1 + c[1][1] * y2);
      const Mat2 J = P.F.jacobian(y1, y2);
      const Mat2 D{{{J[0][0] - c[0][0], J[0][1] - c[0][1]}, {J[1][0] - c[1][0], J[1][1] - c[1][1]}}};
      for (int i = 0; i < 2; ++i) {
        const Vec2 q = detail::mul_t(D, {p.p[i].y1(n, j), p.p[i].y2(n, j)});
        s.p[static_cast<std::size_t>(i)].y1(n, j) -= q[0];
        s.p[static_cast<std::size_t>(i)].y2(n, j) -= q[1];
      }
    }
  return s;
}

namespace detail {
inline double max_abs_diff(const StatePair& a, const StatePair& b) {
  return std::max(max_abs_diff(a.y1, b.y1), max_abs_diff(a.y2, b.y2));
}
inline double max_abs(const StatePair& a) { return std::max(max_abs(a.y1), max_abs(a.y2)); }
}  // namespace detail

// Outer Picard on the semilinear remainders, then one run of the semilinear
// state equation (full Newton per level) under the computed controls.
inline ControlResult solve_semilinear_control(const OptimalitySystem& K, const LinearSources* src,
                                              const ControlOptions& opt) {
  const Problem& P = K.problem();
  const Mat2& c = K.c();
  ControlResult R = solve_linearized_control(K, src, opt);
  R.outer_iterations = 1;
  const bool linear = P.F.is_linear() && P.F.c() == c;
  if (!linear) {
    int growing = 0;
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int k = 2; k <= opt.max_outer; ++k) {
      const LinearSources s = semilinear_remainders(P, c, R.y, R.p, src);
      ControlResult next = solve_linearized_control(K, &s, opt);
      double upd = detail::max_abs_diff(next.y, R.y);
      for (int i = 0; i < 2; ++i) upd = std::max(upd, detail::max_abs_diff(next.p.p[i], R.p.p[i]));
      double scale = detail::max_abs(next.y);
      for (int i = 0; i < 2; ++i) scale = std::max(scale, detail::max_abs(next.p.p[i]));
      const double rel = upd / std::max(scale, std::numeric_limits<double>::min());
      auto hist = std::move(R.outer_updates);
      hist.push_back(rel);
      R = std::move(next);
      R.outer_updates = std::move(hist);
      R.outer_iterations = k;
      if (!std::isfinite(rel)) throw SolverError("outer iteration produced non-finite values; reduce the initial data", R.outer_updates);
      if (rel <= opt.tol_outer || upd == 0.0) {
        converged = true;
        break;
      }
      growing = rel > prev ? growing + 1 : 0;
      if (growing >= 3)
        throw SolverError("outer iteration diverging (update grew three times in a row); reduce the initial data",
                          R.outer_updates);
      prev = rel;
    }
    if (!converged) throw SolverError("outer iteration did not converge", R.outer_updates);
  }

  // Semilinear state under the computed controls.
  StepOptions verify = P.step;
  verify.full_newton = true;
  const StatePair sources = assemble_sources(P, &R.h, R.v, src != nullptr ? &src->y : nullptr);
  R.y = solve_forward(P.grid, P.tc, P.F, P.initial, sources, verify);
  R.terminal_norm = terminal_norm(R.y, P.grid);
  return R;
}

// Observability of the (phi, psi) system: phi backward from terminal data,
// psi forward from zero, coupled through the follower feedback. This is the
// transpose of the optimality system.
struct ObservabilityOptions {
  int n_samples = 50;
  int n_modes = 8;            // terminal data are Gaussian combinations of sin(k pi x)
  double obs_exponent = 28.0;
  std::uint64_t seed = 1;
};

struct ObservabilitySample {
  double lhs = 0.0;
  double log_rhs = -std::numeric_limits<double>::infinity();
  double log_ratio = -std::numeric_limits<double>::infinity();  // ln(lhs / rhs); -inf when lhs = 0
};

struct ObservabilityReport {
  std::vector<ObservabilitySample> samples;
  double max_log_ratio = -std::numeric_limits<double>::infinity();
  bool violation = false;  // rhs = 0 with lhs > 0
};

namespace detail {
inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace detail

inline ObservabilitySample observe(const OptimalitySystem& K, const RhoFamily& rho, std::span<const double> phi1_T,
                                   std::span<const double> phi2_T, double obs_exponent) {
  const Problem& P = K.problem();
  const Grid& g = P.grid;
  const double dx = g.dx(), dt = g.dt();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(K.size());
  for (int j = 1; j <= g.n_x; ++j) {
    e[K.index(g.n_t, j, 0)] = phi1_T[static_cast<std::size_t>(j)];
    e[K.index(g.n_t, j, 1)] = phi2_T[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd z = K.solve_transpose(e);

  // phi(0): one more backward step, psi vanishes at t = 0.
  const Tridiag A0 = assemble_adjoint_operator(P.tc, g, 0.0);
  std::vector<Mat2> JT(static_cast<std::size_t>(g.n_x), detail::transpose(K.c()));
  std::vector<Vec2> phi0(static_cast<std::size_t>(g.n_x));
  for (int j = 1; j <= g.n_x; ++j) phi0[static_cast<std::size_t>(j - 1)] = {z[K.index(1, j, 0)], z[K.index(1, j, 1)]};
  solve_coupled_step(A0, dt, JT, phi0);

  double lhs = 0.0;
  for (const Vec2& v : phi0) lhs += (v[0] * v[0] + v[1] * v[1]) * dx;
  for (int j = 1; j <= g.n_x; ++j)
    for (int comp = 2; comp < 6; ++comp) {
      const double v = z[K.index(g.n_t, j, comp)];
      lhs += v * v * dx;
    }

  const WeightFamily& w = rho.weights();
  const Mask o = P.leader_mask();
  const double sl = w.s() * w.lambda();
  double log_rhs = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= g.n_t; ++n) {
    if (!P.rho.active[static_cast<std::size_t>(n)]) continue;
    const double t = g.t(n);
    for (int j = o.j_lo; j <= o.j_hi; ++j) {
      const double f = z[K.index(n, j, 0)];
      if (f == 0.0) continue;
      const double x = g.x(j);
      const double term = 2.0 * w.s() * w.A(x, t) + obs_exponent * std::log(sl * w.zeta(x, t)) + 2.0 * std::log(std::abs(f)) +
                          std::log(dt * dx);
      log_rhs = detail::log_add(log_rhs, term);
    }
  }
  ObservabilitySample s;
  s.lhs = lhs;
  s.log_rhs = log_rhs;
  if (lhs > 0.0) s.log_ratio = std::log(lhs) - log_rhs;
  return s;
}

inline ObservabilityReport observability_ratio(const OptimalitySystem& K, const RhoFamily& rho,
                                               const ObservabilityOptions& opt) {
  const Grid& g = K.problem().grid;
  ObservabilityReport rep;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double pi = std::acos(-1.0);
  for (int s = 0; s < opt.n_samples; ++s) {
    std::vector<double> c1(static_cast<std::size_t>(opt.n_modes)), c2(c1.size());
    for (auto& v : c1) v = gauss(rng);
    for (auto& v : c2) v = gauss(rng);
    std::vector<double> f1(static_cast<std::size_t>(g.nodes()), 0.0), f2(f1.size(), 0.0);
    for (int j = 1; j <= g.n_x; ++j)
      for (int k = 0; k < opt.n_modes; ++k) {
        const double b = std::sin((k + 1) * pi * g.x(j));
        f1[static_cast<std::size_t>(j)] += c1[static_cast<std::size_t>(k)] * b;
        f2[static_cast<std::size_t>(j)] += c2[static_cast<std::size_t>(k)] * b;
      }
    const ObservabilitySample smp = observe(K, rho, f1, f2, opt.obs_exponent);
    if (smp.lhs > 0.0 && smp.log_rhs == -std::numeric_limits<double>::infinity()) rep.violation = true;
    rep.max_log_ratio = std::max(rep.max_log_ratio, smp.log_ratio);
    rep.samples.push_back(smp);
  }
  return rep;
}

// Weighted norms of a control result. All weights are evaluated from the rho
// family normalized at T/2 (the profile's reference logs), trajectories are
// interpolated linearly in time onto a fixed truncated grid so that the
// window edges coincide across space-time grids. Values are natural logs.
struct WeightedNormReport {
  double log_y_rho0 = -std::numeric_limits<double>::infinity();
  double log_p_rho0 = -std::numeric_limits<double>::infinity();
  double log_h_rho1 = -std::numeric_limits<double>::infinity();
  double log_sup_y_rho_hat = -std::numeric_limits<double>::infinity();
  double log_sup_p_rho_hat = -std::numeric_limits<double>::infinity();
  double log_grad_y_rho_hat = -std::numeric_limits<double>::infinity();
  double log_grad_p_rho_hat = -std::numeric_limits<double>::infinity();
  double log_lhs = -std::numeric_limits<double>::infinity();
  double log_kappa0 = -std::numeric_limits<double>::infinity();
  double log_ratio = -std::numeric_limits<double>::infinity();  // lhs / kappa0
  double kappa0_initial = 0.0;                                   // |y^0|^2
};

namespace detail {
// ln of sum over interior nodes of dx * sum_k f_k(t)^2, f linear in time between levels.
inline double log_level_sq(const std::vector<const Field*>& fs, const Grid& g, double t) {
  const double pos = t / g.dt();
  int n0 = std::clamp(static_cast<int>(std::floor(pos)), 0, g.n_t - 1);
  const double th = std::clamp(pos - n0, 0.0, 1.0);
  double s = 0.0;
  for (const Field* f : fs)
    for (int j = 1; j <= g.n_x; ++j) {
      const double v = (1.0 - th) * (*f)(n0, j) + th * (*f)(n0 + 1, j);
      s += v * v;
    }
  s *= g.dx();
  return s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
}

inline double log_level_grad(const std::vector<const Field*>& fs, const Grid& g, const DegenerateDiffusion& a,
                             double t) {
  const double pos = t / g.dt();
  int n0 = std::clamp(static_cast<int>(std::floor(pos)), 0, g.n_t - 1);
  const double th = std::clamp(pos - n0, 0.0, 1.0);
  const double dx = g.dx();
  double s = 0.0;
  for (const Field* f : fs)
    for (int j = 0; j <= g.n_x; ++j) {
      const double u0 = (1.0 - th) * (*f)(n0, j) + th * (*f)(n0 + 1, j);
      const double u1 = (1.0 - th) * (*f)(n0, j + 1) + th * (*f)(n0 + 1, j + 1);
      const double d = (u1 - u0) / dx;
      s += a((j + 0.5) * dx) * d * d;
    }
  s *= dx;
  return s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
}

// ln sum over the masked support of dt dx (w f)^2 on the solver levels.
inline double log_weighted_field(const Field& f, const Grid& g, const Mask& m, std::span<const double> log_w,
                                 std::span<const char> active) {
  double out = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= g.n_t; ++n) {
    if (!active[static_cast<std::size_t>(n)]) continue;
    for (int j = m.j_lo; j <= m.j_hi; ++j) {
      const double v = f(n, j);
      if (v == 0.0) continue;
      out = log_add(out, 2.0 * (log_w[static_cast<std::size_t>(n)] + std::log(std::abs(v))) + std::log(g.dt() * g.dx()));
    }
  }
  return out;
}
}  // namespace detail

inline WeightedNormReport weighted_norm_report(const ControlResult& R, const Problem& P, const RhoFamily& rho,
                                               int n_report = 101) {
  const Grid& g = P.grid;
  const auto tq = truncated_time_grid(g.T, n_report, P.delta_frac);
  const double hq = tq[1] - tq[0];
  const auto& ref = P.rho.log_reference;
  const double NEG = -std::numeric_limits<double>::infinity();
  WeightedNormReport rep;
  const std::vector<const Field*> ys{&R.y.y1, &R.y.y2};
  const std::vector<const Field*> ps{&R.p.p[0].y1, &R.p.p[0].y2, &R.p.p[1].y1, &R.p.p[1].y2};
  const DegenerateDiffusion& a = P.tc.diffusion();
  for (std::size_t q = 0; q < tq.size(); ++q) {
    const double t = tq[q];
    const double wq = std::log((q == 0 || q + 1 == tq.size()) ? 0.5 * hq : hq);
    const double l0 = rho.rho0(t).log() - ref[0];
    const double lh = rho.rho_hat(t).log() - ref[3];
    const double ly = detail::log_level_sq(ys, g, t), lp = detail::log_level_sq(ps, g, t);
    if (ly != NEG) {
      rep.log_y_rho0 = detail::log_add(rep.log_y_rho0, wq + 2.0 * l0 + ly);
      rep.log_sup_y_rho_hat = std::max(rep.log_sup_y_rho_hat, 2.0 * lh + ly);
    }
    if (lp != NEG) {
      rep.log_p_rho0 = detail::log_add(rep.log_p_rho0, wq + 2.0 * l0 + lp);
      rep.log_sup_p_rho_hat = std::max(rep.log_sup_p_rho_hat, 2.0 * lh + lp);
    }
    const double gy = detail::log_level_grad(ys, g, a, t), gp = detail::log_level_grad(ps, g, a, t);
    if (gy != NEG) rep.log_grad_y_rho_hat = detail::log_add(rep.log_grad_y_rho_hat, wq + 2.0 * lh + gy);
    if (gp != NEG) rep.log_grad_p_rho_hat = detail::log_add(rep.log_grad_p_rho_hat, wq + 2.0 * lh + gp);
  }
  rep.log_h_rho1 = detail::log_weighted_field(R.h, g, P.leader_mask(), P.rho.log_rho1, P.rho.active);
  rep.log_lhs = detail::log_add(detail::log_add(rep.log_y_rho0, rep.log_p_rho0), rep.log_h_rho1);

  // kappa0 = |y^0|^2 + rho2-weighted norms of every source slot, same time quadrature
  rep.kappa0_initial = l2_norm_sq(P.initial.y1.level(0), g.dx()) + l2_norm_sq(P.initial.y2.level(0), g.dx());
  double lk = rep.kappa0_initial > 0.0 ? std::log(rep.kappa0_initial) : NEG;
  std::vector<const Field*> src{&R.sources.y.y1, &R.sources.y.y2};
  for (const auto& sp : R.sources.p) {
    src.push_back(&sp.y1);
    src.push_back(&sp.y2);
  }
  for (std::size_t q = 0; q < tq.size(); ++q) {
    const double wq = std::log((q == 0 || q + 1 == tq.size()) ? 0.5 * hq : hq);
    const double ls = detail::log_level_sq(src, g, tq[q]);
    if (ls != NEG) lk = detail::log_add(lk, wq + 2.0 * (rho.rho2(tq[q]).log() - ref[2]) + ls);
  }
  rep.log_kappa0 = lk;
  if (rep.log_lhs != NEG && lk != NEG) rep.log_ratio = rep.log_lhs - lk;
  return rep;
}

}  // namespace snash

#endif  // SNASH_LEADER_CONTROL_HPP

#ifndef SNASH_WEIGHTS_HPP
#define SNASH_WEIGHTS_HPP

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "snash/coeffs_geometry.hpp"
#include "snash/errors.hpp"

namespace snash {

struct CarlemanParameters {
  double s = 1.0;
  double lambda = 1.0;
  double inner_lo = 0.35;  // O' = (inner_lo, inner_hi), compactly inside the leader region
  double inner_hi = 0.75;

  void validate() const {
    if (!(s > 0.0)) throw DomainError("Carleman scale s must be positive");
    if (!(lambda > 0.0)) throw DomainError("Carleman shape parameter lambda must be positive");
    if (!(0.0 < inner_lo && inner_lo < inner_hi && inner_hi < 1.0))
      throw DomainError("inner window must satisfy 0 < lo < hi < 1");
  }
};

// Spatial Carleman function. On [0, lo) it is the integral of s/a(s) from 0,
// on [hi, 1] minus the integral from hi, and on [lo, hi] a quintic Hermite
// bridge matching value, slope and curvature at both junctions.
class Psi {
public:
  Psi(const DegenerateDiffusion& diff, double lo, double hi, int n_quad = 64)
      : alpha_(diff.alpha()), lo_(lo), hi_(hi) {
    if (n_quad < 16) throw DomainError("build_psi needs n_quad >= 16");
    if (!(0.0 < lo && lo < hi && hi < 1.0)) throw DomainError("inner window must satisfy 0 < lo < hi < 1");
    const double p = 2.0 - alpha_;
    v0_ = std::pow(lo, p) / p;
    d0_ = std::pow(lo, 1.0 - alpha_);
    s0_ = (1.0 - alpha_) * std::pow(lo, -alpha_);
    v1_ = 0.0;
    d1_ = -std::pow(hi, 1.0 - alpha_);
    s1_ = -(1.0 - alpha_) * std::pow(hi, -alpha_);
    locate_extrema(n_quad);
  }

  double value(double x) const {
    const double p = 2.0 - alpha_;
    if (x < lo_) return std::pow(x, p) / p;
    if (x >= hi_) return -(std::pow(x, p) - std::pow(hi_, p)) / p;
    return bridge(x, 0);
  }

  double d1(double x) const {
    if (x < lo_) return std::pow(x, 1.0 - alpha_);
    if (x >= hi_) return -std::pow(x, 1.0 - alpha_);
    return bridge(x, 1);
  }

  double d2(double x) const {
    if (x < lo_) return (1.0 - alpha_) * std::pow(x, -alpha_);
    if (x >= hi_) return -(1.0 - alpha_) * std::pow(x, -alpha_);
    return bridge(x, 2);
  }

  double bridge_value(double x) const { return bridge(x, 0); }
  double bridge_d1(double x) const { return bridge(x, 1); }
  double bridge_d2(double x) const { return bridge(x, 2); }

  double max_value() const noexcept { return max_; }
  double min_value() const noexcept { return min_; }
  double sup_norm() const noexcept { return std::max(std::abs(max_), std::abs(min_)); }
  double argmax() const noexcept { return argmax_; }
  double inner_lo() const noexcept { return lo_; }
  double inner_hi() const noexcept { return hi_; }

private:
  double bridge(double x, int order) const {
    const double h = hi_ - lo_;
    const double u = (x - lo_) / h;
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    std::array<double, 6> H{};
    if (order == 0) {
      H = {1 - 10 * u3 + 15 * u4 - 6 * u5, u - 6 * u3 + 8 * u4 - 3 * u5, 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5,
           0.5 * u3 - u4 + 0.5 * u5,       -4 * u3 + 7 * u4 - 3 * u5,   10 * u3 - 15 * u4 + 6 * u5};
    } else if (order == 1) {
      H = {-30 * u2 + 60 * u3 - 30 * u4, 1 - 18 * u2 + 32 * u3 - 15 * u4, u - 4.5 * u2 + 6 * u3 - 2.5 * u4,
           1.5 * u2 - 4 * u3 + 2.5 * u4, -12 * u2 + 28 * u3 - 15 * u4,    30 * u2 - 60 * u3 + 30 * u4};
    } else {
      H = {-60 * u + 180 * u2 - 120 * u3, -36 * u + 96 * u2 - 60 * u3, 1 - 9 * u + 18 * u2 - 10 * u3,
           3 * u - 12 * u2 + 10 * u3,     -24 * u + 84 * u2 - 60 * u3, 60 * u - 180 * u2 + 120 * u3};
    }
    const double val = v0_ * H[0] + h * d0_ * H[1] + h * h * s0_ * H[2] + h * h * s1_ * H[3] + h * d1_ * H[4] +
                       v1_ * H[5];
    return val / std::pow(h, order);
  }

  void locate_extrema(int n_quad) {
    // Psi increases on [0,lo), decreases on [hi,1]; the maximum sits in the
    // bridge and the minimum at x = 1 unless the bridge dips below it.
    const int n = 64 * n_quad;
    max_ = value(0.0);
    min_ = value(1.0);
    argmax_ = 0.0;
    int kmax = 0;
    for (int k = 0; k <= n; ++k) {
      const double x = static_cast<double>(k) / n;
      const double v = value(x);
      if (v > max_) { max_ = v; argmax_ = x; kmax = k; }
      min_ = std::min(min_, v);
    }
    // Golden-section refinement of the maximum.
    double a = std::max(0.0, static_cast<double>(kmax - 1) / n);
    double b = std::min(1.0, static_cast<double>(kmax + 1) / n);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
      const double c = b - g * (b - a), d = a + g * (b - a);
      if (value(c) > value(d)) b = d; else a = c;
    }
    const double xr = 0.5 * (a + b);
    if (value(xr) > max_) { max_ = value(xr); argmax_ = xr; }
  }

  double alpha_, lo_, hi_;
  double v0_, d0_, s0_, v1_, d1_, s1_;
  double max_ = 0.0, min_ = 0.0, argmax_ = 0.0;
};

inline Psi build_psi(const DegenerateDiffusion& diff, const CarlemanParameters& params, int n_quad = 64) {
  params.validate();
  return Psi(diff, params.inner_lo, params.inner_hi, n_quad);
}

// Logarithm of a weight split into its Carleman exponential part and its
// algebraic power part. Keeping the parts apart makes products of weights
// exact up to the rounding of each part separately.
struct LogWeight {
  double exponential = 0.0;
  double algebraic = 0.0;
  double log() const noexcept { return exponential + algebraic; }
  double value() const noexcept { return std::exp(log()); }
};

struct WeightPoint {
  double theta, sigma, phi, zeta, A;
};

class WeightFamily {
public:
  WeightFamily(Psi psi, double T, double s, double lambda) : psi_(std::move(psi)), T_(T), s_(s), lambda_(lambda) {
    if (!(T > 0.0)) throw DomainError("final time must be positive");
    if (!(s > 0.0) || !(lambda > 0.0)) throw DomainError("s and lambda must be positive");
    const double sup = psi_.sup_norm();
    e3_ = std::exp(3.0 * lambda_ * sup);
    eta_max_ = std::exp(lambda_ * (sup + psi_.max_value()));
    eta_min_ = std::exp(lambda_ * (sup + psi_.min_value()));
    m0_ = std::pow(T_ / 2.0, 8) / 16.0;
  }

  const Psi& psi() const noexcept { return psi_; }
  double T() const noexcept { return T_; }
  double s() const noexcept { return s_; }
  double lambda() const noexcept { return lambda_; }

  double theta(double t) const {
    if (t <= 0.0 || t >= T_) return std::numeric_limits<double>::infinity();
    return std::pow(t * (T_ - t), -4.0);
  }

  double eta(double x) const { return std::exp(lambda_ * (psi_.sup_norm() + psi_.value(x))); }
  double eta_max() const noexcept { return eta_max_; }
  double eta_min() const noexcept { return eta_min_; }
  double e3() const noexcept { return e3_; }

  double sigma(double x, double t) const { return theta(t) * eta(x); }
  double phi(double x, double t) const { return theta(t) * (eta(x) - e3_); }

  // exp(2 s phi), with the limit 0 at t in {0, T}.
  double exp_2s_phi(double x, double t) const {
    if (t <= 0.0 || t >= T_) return 0.0;
    return std::exp(2.0 * s_ * phi(x, t));
  }

  // C-infinity step: 1 on [0, T/4], 0 on [T/2, T].
  double bump(double t) const {
    if (t <= T_ / 4.0) return 1.0;
    if (t >= T_ / 2.0) return 0.0;
    const double u = (T_ / 2.0 - t) / (T_ / 4.0);
    const double f = std::exp(-1.0 / u), g = std::exp(-1.0 / (1.0 - u));
    return f / (f + g);
  }

  double m(double t) const {
    const double base = std::pow(t * (T_ - t), 4.0);
    return base + m0_ * bump(t);
  }
  double m0() const noexcept { return m0_; }

  double tau(double t) const {
    const double mm = m(t);
    return mm > 0.0 ? 1.0 / mm : std::numeric_limits<double>::infinity();
  }

  double zeta(double x, double t) const { return tau(t) * eta(x); }
  double A(double x, double t) const { return tau(t) * (eta(x) - e3_); }

  double A_star(double t) const { return tau(t) * (eta_max_ - e3_); }
  double A_hat(double t) const { return tau(t) * (eta_min_ - e3_); }
  double zeta_star(double t) const { return tau(t) * eta_max_; }
  double zeta_hat(double t) const { return tau(t) * eta_min_; }
  double phi_hat(double t) const { return theta(t) * (eta_min_ - e3_); }

  // 2 A_hat - 3 A_star. Its sign does not depend on t.
  double margin(double t) const { return tau(t) * (e3_ + 2.0 * eta_min_ - 3.0 * eta_max_); }
  double margin_factor() const noexcept { return e3_ + 2.0 * eta_min_ - 3.0 * eta_max_; }

private:
  Psi psi_;
  double T_, s_, lambda_;
  double e3_ = 0.0, eta_max_ = 0.0, eta_min_ = 0.0, m0_ = 0.0;
};

inline WeightPoint eval_weights(const WeightFamily& w, double x, double t) {
  return {w.theta(t), w.sigma(x, t), w.phi(x, t), w.zeta(x, t), w.A(x, t)};
}

// The rho family, in log form.
class RhoFamily {
public:
  explicit RhoFamily(WeightFamily w) : w_(std::move(w)) {}

  const WeightFamily& weights() const noexcept { return w_; }

  LogWeight rho0(double t) const { return {-w_.s() * w_.A_star(t), -7.0 * std::log(w_.zeta_star(t))}; }
  LogWeight rho1(double t) const { return {-w_.s() * w_.A_star(t), -14.0 * std::log(w_.zeta_star(t))}; }
  LogWeight rho2(double t) const { return {-1.5 * w_.s() * w_.A_star(t), -std::log(w_.zeta_hat(t))}; }
  LogWeight rho_hat(double t) const { return {-w_.s() * w_.A_star(t), -10.5 * std::log(w_.zeta_star(t))}; }
  LogWeight rho_star(double t) const { return {-0.5 * w_.s() * w_.phi_hat(t), 0.0}; }

private:
  WeightFamily w_;
};

inline std::vector<double> truncated_time_grid(double T, int n_t, double delta_frac) {
  if (!(delta_frac > 0.0 && delta_frac < 0.1)) throw DomainError("delta_frac must lie in (0, 0.1)");
  if (n_t < 2) throw DomainError("truncated grid needs at least two points");
  std::vector<double> t(static_cast<std::size_t>(n_t));
  const double a = delta_frac * T, b = (1.0 - delta_frac) * T;
  for (int i = 0; i < n_t; ++i) t[static_cast<std::size_t>(i)] = a + (b - a) * i / (n_t - 1);
  return t;
}

struct OrderingRow {
  double t, A_star, A_hat, margin;
  LogWeight rho0, rho1, rho2, rho_hat;
  double identity_residual;  // |rho_hat^2 - rho0 rho1| / rho_hat^2
};

struct OrderingsReport {
  std::vector<OrderingRow> rows;
  double max_identity_residual = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  double min_margin_t = 0.0;
  // log of the empirical constants C in rho1 <= C rho_hat, rho_hat <= C rho0,
  // rho0 <= C rho2, rho2 <= C rho1^2
  std::array<double, 4> log_order_constants{};
  // max over the space-time grid of rho_star^{-2} e^{-s phi} - 1
  double rho_star_bound_excess = 0.0;
  double worst_t = 0.0;
  bool ok() const { return max_identity_residual <= 1e-12 && min_margin > 0.0 && rho_star_bound_excess <= 1e-12; }
};

inline OrderingsReport verify_orderings(const RhoFamily& rho, const WeightFamily& w, std::span<const double> times,
                                        int n_x_samples = 201) {
  OrderingsReport r;
  r.log_order_constants.fill(-std::numeric_limits<double>::infinity());
  double worst_identity = -1.0;
  for (double t : times) {
    OrderingRow row{};
    row.t = t;
    row.A_star = w.A_star(t);
    row.A_hat = w.A_hat(t);
    row.margin = w.margin(t);
    row.rho0 = rho.rho0(t);
    row.rho1 = rho.rho1(t);
    row.rho2 = rho.rho2(t);
    row.rho_hat = rho.rho_hat(t);
    const double diff = (2.0 * row.rho_hat.exponential - row.rho0.exponential - row.rho1.exponential) +
                        (2.0 * row.rho_hat.algebraic - row.rho0.algebraic - row.rho1.algebraic);
    row.identity_residual = std::abs(std::expm1(diff));
    r.rows.push_back(row);

    if (row.identity_residual > worst_identity) { worst_identity = row.identity_residual; r.worst_t = t; }
    if (row.margin < r.min_margin) { r.min_margin = row.margin; r.min_margin_t = t; }
    const std::array<double, 4> logs{row.rho1.log() - row.rho_hat.log(), row.rho_hat.log() - row.rho0.log(),
                                     row.rho0.log() - row.rho2.log(), row.rho2.log() - 2.0 * row.rho1.log()};
    for (std::size_t k = 0; k < 4; ++k) r.log_order_constants[k] = std::max(r.log_order_constants[k], logs[k]);

    // rho_star^{-2} e^{-s phi} = exp(s (phi_hat - phi)) = exp(s theta (eta_min - eta(x)))
    const double th = w.theta(t);
    for (int k = 0; k < n_x_samples; ++k) {
      const double x = static_cast<double>(k) / (n_x_samples - 1);
      const double e = std::expm1(w.s() * th * (w.eta_min() - w.eta(x)));
      r.rho_star_bound_excess = std::max(r.rho_star_bound_excess, e);
    }
  }
  r.max_identity_residual = std::max(worst_identity, 0.0);
  return r;
}

// Smallest lambda on the scan 1, 1+step, ... with 2 A_hat - 3 A_star > 0.
inline double scan_lambda0(const Psi& psi, double T, double s, double step = 0.05, double lambda_max = 1e3) {
  for (int k = 0;; ++k) {
    const double lambda = 1.0 + step * k;
    if (lambda > lambda_max) throw SolverError("no lambda with positive weight margin below lambda_max");
    WeightFamily w(psi, T, s, lambda);
    if (w.margin_factor() > 0.0) return lambda;
  }
}

// Rho weights sampled on solver time levels, normalized so that each weight
// equals 1 at t = T/2. Levels outside the truncated window carry an infinite
// weight, i.e. a zero inverse.
struct RhoProfile {
  std::vector<double> t;
  std::vector<char> active;           // inside [delta T, (1-delta) T]
  std::vector<double> rho_star_inv2;  // rho_star^{-2}
  std::vector<double> rho1_inv;       // rho1^{-1}
  std::vector<double> log_rho0, log_rho1, log_rho2, log_rho_hat, log_rho_star;
  std::array<double, 5> log_reference{};  // value removed from each log weight
};

inline RhoProfile make_rho_profile(const RhoFamily& rho, std::span<const double> times, double delta_frac) {
  const double T = rho.weights().T();
  const double mid = 0.5 * T;
  RhoProfile p;
  p.log_reference = {rho.rho0(mid).log(), rho.rho1(mid).log(), rho.rho2(mid).log(), rho.rho_hat(mid).log(),
                     rho.rho_star(mid).log()};
  const double lo = delta_frac * T * (1.0 - 1e-12), hi = (1.0 - delta_frac) * T * (1.0 + 1e-12);
  for (double t : times) {
    const bool in = t >= lo && t <= hi;
    p.t.push_back(t);
    p.active.push_back(in ? 1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    const double l0 = in ? rho.rho0(t).log() - p.log_reference[0] : inf;
    const double l1 = in ? rho.rho1(t).log() - p.log_reference[1] : inf;
    const double l2 = in ? rho.rho2(t).log() - p.log_reference[2] : inf;
    const double lh = in ? rho.rho_hat(t).log() - p.log_reference[3] : inf;
    const double ls = in ? rho.rho_star(t).log() - p.log_reference[4] : inf;
    p.log_rho0.push_back(l0);
    p.log_rho1.push_back(l1);
    p.log_rho2.push_back(l2);
    p.log_rho_hat.push_back(lh);
    p.log_rho_star.push_back(ls);
    p.rho_star_inv2.push_back(in ? std::exp(-2.0 * ls) : 0.0);
    p.rho1_inv.push_back(in ? std::exp(-l1) : 0.0);
  }
  return p;
}

}  // namespace snash

#endif  // SNASH_WEIGHTS_HPP

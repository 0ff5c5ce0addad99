#ifndef SNASH_COEFFS_GEOMETRY_HPP
#define SNASH_COEFFS_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "snash/errors.hpp"

namespace snash {

// Power-law diffusion a(x) = x^alpha, extended to all x >= 0 so that a(l(t))
// makes sense when the moving boundary passes x = 1.
class DegenerateDiffusion {
public:
  explicit DegenerateDiffusion(double alpha, double K = -1.0) : alpha_(alpha), K_(K < 0 ? alpha : K) {
    if (!(alpha > 0.0)) throw DomainError("diffusion exponent must be positive");
    if (alpha >= 1.0) throw DomainError("strongly degenerate coefficient (alpha >= 1) unsupported");
    if (!(K_ > 0.0) || K_ > 1.0) throw DomainError("hypothesis constant K must lie in (0,1]");
  }

  double alpha() const noexcept { return alpha_; }
  double K() const noexcept { return K_; }

  double operator()(double x) const {
    if (x < 0.0) throw DomainError("a(x) requires x >= 0");
    return x == 0.0 ? 0.0 : std::pow(x, alpha_);
  }

  // a'(x); infinite at 0 for alpha < 1.
  double derivative(double x) const {
    if (x < 0.0) throw DomainError("a'(x) requires x >= 0");
    return alpha_ * std::pow(x, alpha_ - 1.0);
  }

private:
  double alpha_;
  double K_;
};

inline double eval_a(const DegenerateDiffusion& diff, double x) { return diff(x); }

enum class EllFamily { constant, linear, sinusoidal };

inline std::string to_string(EllFamily f) {
  switch (f) {
    case EllFamily::constant: return "constant";
    case EllFamily::linear: return "linear";
    case EllFamily::sinusoidal: return "sinusoidal";
  }
  return "?";
}

// Moving interval (0, l(t)) on [0, T]. l comes from a closed-form family:
//   constant   l = 1
//   linear     l = 1 + gamma t
//   sinusoidal l = 1 + gamma sin(pi t / T)
class MovingDomain {
public:
  MovingDomain(double T, EllFamily family, double gamma, double drift_bound)
      : T_(T), family_(family), gamma_(family == EllFamily::constant ? 0.0 : gamma), drift_bound_(drift_bound) {
    if (!(T > 0.0)) throw DomainError("final time must be positive");
    if (family_ == EllFamily::linear && !(1.0 + gamma_ * T_ > 0.0))
      throw DomainError("linear boundary l(t)=1+gamma t must stay positive on [0,T]");
    if (family_ == EllFamily::sinusoidal && !(std::abs(gamma_) < 1.0))
      throw DomainError("sinusoidal boundary needs |gamma| < 1");
  }

  static MovingDomain fixed(double T) { return MovingDomain(T, EllFamily::constant, 0.0, 0.0); }

  double T() const noexcept { return T_; }
  EllFamily family() const noexcept { return family_; }
  double gamma() const noexcept { return gamma_; }
  double drift_bound() const noexcept { return drift_bound_; }

  double ell(double t) const {
    switch (family_) {
      case EllFamily::constant: return 1.0;
      case EllFamily::linear: return 1.0 + gamma_ * t;
      case EllFamily::sinusoidal: return 1.0 + gamma_ * std::sin(std::numbers::pi * t / T_);
    }
    return 1.0;
  }

  double ell_prime(double t) const {
    switch (family_) {
      case EllFamily::constant: return 0.0;
      case EllFamily::linear: return gamma_;
      case EllFamily::sinusoidal: return gamma_ * std::numbers::pi / T_ * std::cos(std::numbers::pi * t / T_);
    }
    return 0.0;
  }

  void require_time(double t) const {
    // Small slack so that grid times computed as n*dt are accepted at t = T.
    if (!(t >= -1e-12 * T_ && t <= T_ * (1.0 + 1e-12))) throw DomainError("time outside [0,T]");
  }

private:
  double T_;
  EllFamily family_;
  double gamma_;
  double drift_bound_;
};

struct HypothesisReport {
  double coefficient_violation = 0.0;  // max over x of x a'(x) - K a(x)
  double worst_x = 0.0;
  double drift_violation = 0.0;        // max over t of l'/l - C
  double worst_t = 0.0;
  bool ok(double tol = 1e-12) const { return coefficient_violation <= tol && drift_violation <= tol; }
};

inline HypothesisReport check_hypotheses(const DegenerateDiffusion& diff, const MovingDomain& dom, int n_samples) {
  if (n_samples < 2) throw DomainError("check_hypotheses needs at least two samples");
  HypothesisReport r;
  r.coefficient_violation = -std::numeric_limits<double>::infinity();
  r.drift_violation = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= n_samples; ++i) {
    const double x = static_cast<double>(i) / n_samples;
    const double v = x * diff.derivative(x) - diff.K() * diff(x);
    if (v > r.coefficient_violation) { r.coefficient_violation = v; r.worst_x = x; }
  }
  for (int i = 0; i < n_samples; ++i) {
    const double t = dom.T() * static_cast<double>(i) / (n_samples - 1);
    const double v = dom.ell_prime(t) / dom.ell(t) - dom.drift_bound();
    if (v > r.drift_violation) { r.drift_violation = v; r.worst_t = t; }
  }
  return r;
}

// Coefficients of the problem pulled back to the unit cylinder:
//   b(t) = a(l(t)) / l(t)^2,   drift(x,t) = l'(t) x / l(t)  (the product B sqrt(a)).
class TransformedCoefficients {
public:
  TransformedCoefficients(DegenerateDiffusion diff, MovingDomain dom) : diff_(diff), dom_(dom) {}

  const DegenerateDiffusion& diffusion() const noexcept { return diff_; }
  const MovingDomain& domain() const noexcept { return dom_; }

  double b(double t) const {
    dom_.require_time(t);
    const double l = dom_.ell(t);
    return diff_(l) / (l * l);
  }

  // Per unit x: drift(x,t) = rate(t) * x.
  double drift_rate(double t) const { return dom_.ell_prime(t) / dom_.ell(t); }
  double drift(double x, double t) const { return drift_rate(t) * x; }

  // Sampled bounds m <= b(t) <= M.
  std::pair<double, double> b_bounds(int n_samples = 1001) const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      const double v = b(dom_.T() * i / (n_samples - 1));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

private:
  DegenerateDiffusion diff_;
  MovingDomain dom_;
};

inline double eval_b(const TransformedCoefficients& tc, double t) { return tc.b(t); }

inline double map_to_cylinder(const MovingDomain& dom, double x_prime, double t) {
  dom.require_time(t);
  const double l = dom.ell(t);
  if (x_prime < 0.0 || x_prime > l * (1.0 + 1e-15)) throw DomainError("x' outside (0, l(t))");
  return x_prime / l;
}

inline double map_from_cylinder(const MovingDomain& dom, double x, double t) {
  dom.require_time(t);
  if (x < 0.0 || x > 1.0) throw DomainError("x outside [0,1]");
  return x * dom.ell(t);
}

namespace detail {
// Resample uniform samples of [0, L_src] onto n uniform samples of [0, L_dst]
// where x_dst / L_dst == x_src / L_src. The scaling cancels, so only the
// fractional index matters.
inline std::vector<double> resample_uniform(std::span<const double> src, std::size_t n) {
  if (src.size() < 2) throw DomainError("field transfer needs at least two samples");
  if (n < 2) throw DomainError("target grid needs at least two samples");
  std::vector<double> out(n);
  const double last = static_cast<double>(src.size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = last * static_cast<double>(i) / static_cast<double>(n - 1);
    auto k = static_cast<std::size_t>(s);
    if (k >= src.size() - 1) k = src.size() - 2;
    const double w = s - static_cast<double>(k);
    out[i] = w == 0.0 ? src[k] : (1.0 - w) * src[k] + w * src[k + 1];
  }
  out.front() = src.front();
  out.back() = src.back();
  return out;
}
}  // namespace detail

// Field sampled uniformly on (0, l(t)) -> field sampled uniformly on (0, 1).
inline std::vector<double> pullback_field(const MovingDomain& dom, std::span<const double> field, double t,
                                          std::size_t n_target) {
  dom.require_time(t);
  return detail::resample_uniform(field, n_target);
}

inline std::vector<double> pushforward_field(const MovingDomain& dom, std::span<const double> field, double t,
                                             std::size_t n_target) {
  dom.require_time(t);
  return detail::resample_uniform(field, n_target);
}

}  // namespace snash

#endif  // SNASH_COEFFS_GEOMETRY_HPP

#ifndef SNASH_COUPLING_HPP
#define SNASH_COUPLING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "snash/errors.hpp"

namespace snash {

using Vec2 = std::array<double, 2>;
// Row-major 2x2: m[i][j].
using Mat2 = std::array<std::array<double, 2>, 2>;

enum class CouplingFamily { linear, bounded_sine };

inline std::string to_string(CouplingFamily f) { return f == CouplingFamily::linear ? "linear" : "bounded-sine"; }

// Semilinear coupling (F1, F2). Both families are parametrized by the matrix
// c with c[i][j] = D_j F_i(0,0):
//   linear        F_i = c_i1 y1 + c_i2 y2
//   bounded-sine  F_i = c_i1 sin(y1) + c_i2 sin(y2)
class CouplingF {
public:
  CouplingF() = default;
  CouplingF(CouplingFamily family, Mat2 c) : family_(family), c_(c) {}

  static CouplingF zero() { return {}; }
  static CouplingF linear(Mat2 c) { return {CouplingFamily::linear, c}; }
  static CouplingF bounded_sine(Mat2 c) { return {CouplingFamily::bounded_sine, c}; }

  CouplingFamily family() const noexcept { return family_; }
  const Mat2& c() const noexcept { return c_; }
  bool is_linear() const noexcept { return family_ == CouplingFamily::linear; }

  Vec2 value(double y1, double y2) const {
    const Vec2 g = basis(y1, y2);
    return {c_[0][0] * g[0] + c_[0][1] * g[1], c_[1][0] * g[0] + c_[1][1] * g[1]};
  }

  // jacobian(y)[i][j] = D_j F_i(y)
  Mat2 jacobian(double y1, double y2) const {
    const Vec2 d = basis_d1(y1, y2);
    return {{{c_[0][0] * d[0], c_[0][1] * d[1]}, {c_[1][0] * d[0], c_[1][1] * d[1]}}};
  }

  // D^2_{jk} F_i(y). Both families are sums of functions of one variable, so
  // only j == k survives.
  double hessian(int i, int j, int k, double y1, double y2) const {
    if (j != k) return 0.0;
    const Vec2 d2 = basis_d2(y1, y2);
    return c_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * d2[static_cast<std::size_t>(j)];
  }

  // Bound on all first and second partial derivatives.
  double bound() const {
    double m = 0.0;
    for (const auto& row : c_)
      for (double v : row) m = std::max(m, std::abs(v));
    return m;
  }

  // Linearization at the origin: c_ij = D_j F_i(0,0).
  CouplingF linearized() const { return linear(c_); }

private:
  Vec2 basis(double y1, double y2) const {
    if (family_ == CouplingFamily::linear) return {y1, y2};
    return {std::sin(y1), std::sin(y2)};
  }
  Vec2 basis_d1(double y1, double y2) const {
    if (family_ == CouplingFamily::linear) return {1.0, 1.0};
    return {std::cos(y1), std::cos(y2)};
  }
  Vec2 basis_d2(double y1, double y2) const {
    if (family_ == CouplingFamily::linear) return {0.0, 0.0};
    return {-std::sin(y1), -std::sin(y2)};
  }

  CouplingFamily family_ = CouplingFamily::linear;
  Mat2 c_{};
};

}  // namespace snash

#endif  // SNASH_COUPLING_HPP

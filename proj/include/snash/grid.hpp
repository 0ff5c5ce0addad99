#ifndef SNASH_GRID_HPP
#define SNASH_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "snash/errors.hpp"

namespace snash {

// Uniform space-time grid on [0,1] x [0,T]. Nodes j = 0..n_x+1 in space
// (the two ends carry Dirichlet zeros), levels n = 0..n_t in time.
struct Grid {
  int n_x = 0;
  int n_t = 0;
  double T = 1.0;

  Grid() = default;
  Grid(int nx, int nt, double final_time) : n_x(nx), n_t(nt), T(final_time) {
    if (n_x < 1 || n_t < 1) throw DomainError("grid needs n_x >= 1 and n_t >= 1");
    if (!(T > 0.0)) throw DomainError("final time must be positive");
  }

  int nodes() const noexcept { return n_x + 2; }
  int levels() const noexcept { return n_t + 1; }
  double dx() const noexcept { return 1.0 / (n_x + 1); }
  double dt() const noexcept { return T / n_t; }
  double x(int j) const noexcept { return j * dx(); }
  double t(int n) const noexcept { return n == n_t ? T : n * dt(); }

  std::vector<double> times() const {
    std::vector<double> out(static_cast<std::size_t>(levels()));
    for (int n = 0; n <= n_t; ++n) out[static_cast<std::size_t>(n)] = t(n);
    return out;
  }
};

// Scalar field on all grid nodes, stored level by level.
class Field {
public:
  Field() = default;
  explicit Field(const Grid& g) : nx2_(g.nodes()), nt1_(g.levels()), data_(static_cast<std::size_t>(nx2_ * nt1_), 0.0) {}

  double& operator()(int n, int j) { return data_[idx(n, j)]; }
  double operator()(int n, int j) const { return data_[idx(n, j)]; }

  std::span<double> level(int n) { return {data_.data() + idx(n, 0), static_cast<std::size_t>(nx2_)}; }
  std::span<const double> level(int n) const { return {data_.data() + idx(n, 0), static_cast<std::size_t>(nx2_)}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  int nodes() const noexcept { return nx2_; }
  int levels() const noexcept { return nt1_; }

private:
  std::size_t idx(int n, int j) const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(nx2_) + static_cast<std::size_t>(j); }
  int nx2_ = 0;
  int nt1_ = 0;
  std::vector<double> data_;
};

struct StatePair {
  Field y1, y2;
  StatePair() = default;
  explicit StatePair(const Grid& g) : y1(g), y2(g) {}
  Field& operator[](int k) { return k == 0 ? y1 : y2; }
  const Field& operator[](int k) const { return k == 0 ? y1 : y2; }
};

// Adjoint states of the two followers: p[i] = (p^i_1, p^i_2).
struct AdjointQuad {
  StatePair p[2];
  AdjointQuad() = default;
  explicit AdjointQuad(const Grid& g) : p{StatePair(g), StatePair(g)} {}
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
  bool overlaps(const Interval& o) const noexcept { return lo < o.hi && o.lo < hi; }
  bool operator==(const Interval&) const = default;
};

// Interior node range [j_lo, j_hi] covering an interval, rounded outward.
struct Mask {
  int j_lo = 1;
  int j_hi = 0;
  bool contains(int j) const noexcept { return j >= j_lo && j <= j_hi; }
  int count() const noexcept { return j_hi >= j_lo ? j_hi - j_lo + 1 : 0; }
};

inline Mask make_mask(const Interval& iv, const Grid& g) {
  const double dx = g.dx();
  int lo = static_cast<int>(std::floor(iv.lo / dx + 1e-9));
  int hi = static_cast<int>(std::ceil(iv.hi / dx - 1e-9));
  lo = std::max(lo, 1);
  hi = std::min(hi, g.n_x);
  return {lo, hi};
}

inline double l2_norm_sq(std::span<const double> level, double dx) {
  double s = 0.0;
  for (double v : level) s += v * v;
  return s * dx;
}

}  // namespace snash

#endif  // SNASH_GRID_HPP

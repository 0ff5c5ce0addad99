#ifndef SNASH_TESTS_FIXTURES_HPP
#define SNASH_TESTS_FIXTURES_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "snash/config.hpp"
#include "snash/setup.hpp"

namespace fixtures {

// Leader scenario geometry: l = 1 + 0.2 t, a = x^0.5, default regions.
inline snash::ProblemConfig moving_config(int n_x, int n_t) {
  snash::ProblemConfig c;
  c.ell = snash::EllFamily::linear;
  c.gamma = 0.2;
  c.c = {{{0.5, 0.3}, {0.5, 0.3}}};
  c.n_x = n_x;
  c.n_t = n_t;
  c.initial = snash::InitialShape::sine;
  c.initial_norm = 0.05;
  return c;
}

inline snash::ProblemConfig nash_config(int n_x, int n_t, double mu) {
  auto c = moving_config(n_x, n_t);
  c.mu = {mu, mu};
  c.follower_alpha = {2.0, 1.0};
  c.target[0] = {0.1, 0.0};
  c.target[1] = {0.0, -0.05};
  return c;
}

inline snash::StatePair random_pair(const snash::Grid& g, std::mt19937_64& rng, bool with_level0 = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  snash::StatePair s(g);
  for (int n = with_level0 ? 0 : 1; n <= g.n_t; ++n)
    for (int j = 1; j <= g.n_x; ++j) {
      s.y1(n, j) = u(rng);
      s.y2(n, j) = u(rng);
    }
  return s;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("snash_test_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace fixtures

#endif  // SNASH_TESTS_FIXTURES_HPP

#ifndef SNASH_CONFIG_HPP
#define SNASH_CONFIG_HPP

#include <array>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snash/coeffs_geometry.hpp"
#include "snash/coupling.hpp"
#include "snash/errors.hpp"
#include "snash/grid.hpp"

namespace snash {

enum class InitialShape { zero, sine, bump };

inline std::string to_string(InitialShape s) {
  switch (s) {
    case InitialShape::zero: return "zero";
    case InitialShape::sine: return "sine";
    case InitialShape::bump: return "bump";
  }
  return "zero";
}

struct ProblemConfig {
  // geometry
  double T = 1.0;
  EllFamily ell = EllFamily::constant;
  double gamma = 0.0;
  std::optional<double> drift_bound;  // derived from the family when absent
  // coefficient
  double alpha = 0.5;
  std::optional<double> K;
  // coupling
  CouplingFamily coupling = CouplingFamily::linear;
  Mat2 c{};
  // regions
  Interval O{0.3, 0.8};
  Interval O1{0.2, 0.4};
  Interval O2{0.6, 0.8};
  Interval Od{0.45, 0.55};
  // followers
  std::array<double, 2> follower_alpha{1.0, 1.0};
  std::array<double, 2> mu{1.0, 1.0};
  std::array<Vec2, 2> target{};
  // weights
  double s = 1.0;
  std::optional<double> lambda;  // scanned when absent
  double inner_lo = 0.35;
  double inner_hi = 0.75;
  double delta_frac = 0.01;
  double obs_exponent = 28.0;
  // discretization
  int n_x = 64;
  int n_t = 128;
  // solver
  double tol_nash = 1e-9;
  int max_nash = 200;
  double omega = 0.7;
  double tol_outer = 1e-8;
  int max_outer = 50;
  double eps_pen = 1e-8;
  double tol_cg = 1e-10;
  int max_cg = 500;
  bool full_newton = false;
  int convexity_directions = 100;
  std::uint64_t seed = 1;
  // initial data
  InitialShape initial = InitialShape::zero;
  double initial_norm = 0.0;
  int initial_mode = 1;
  // observability
  int obs_samples = 50;
  int obs_modes = 8;
  // sweep
  std::string sweep_command = "nash";
  std::string sweep_key;
  std::vector<double> sweep_values;

  bool operator==(const ProblemConfig&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

inline std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_integer(const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Line-oriented reader for the flat INI dialect used by run configs:
// [section] headers, key = value pairs, '#' or ';' comments.
class ConfigReader {
public:
  explicit ConfigReader(ProblemConfig& cfg) : cfg_(cfg) {}

  void feed(std::string_view text) {
    std::string section;
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      std::string line = detail::trim(raw);
      if (const auto c = line.find_first_of("#;"); c != std::string::npos) line = detail::trim(line.substr(0, c));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          error(line_no, "malformed section header '" + line + "'");
          continue;
        }
        section = detail::trim(line.substr(1, line.size() - 2));
        if (!known_section(section)) error(line_no, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        error(line_no, "expected key = value");
        continue;
      }
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (section.empty()) {
        error(line_no, "key '" + key + "' outside any section");
        continue;
      }
      if (!known_section(section)) continue;
      assign(line_no, section, key, value);
    }
  }

  std::vector<std::string>& errors() { return errors_; }

private:
  static bool known_section(const std::string& s) {
    static const char* names[] = {"geometry", "coefficient", "coupling", "regions", "follower", "weights",
                                  "discretization", "solver", "initial", "observability", "sweep"};
    for (const char* n : names)
      if (s == n) return true;
    return false;
  }

  void error(std::size_t line, const std::string& msg) { errors_.push_back("line " + std::to_string(line) + ": " + msg); }

  bool real(std::size_t line, const std::string& key, const std::string& v, double& out) {
    const auto r = detail::parse_real(v);
    if (!r) {
      error(line, "malformed number '" + v + "' for " + key);
      return false;
    }
    out = *r;
    return true;
  }

  template <class Int>
  bool integer(std::size_t line, const std::string& key, const std::string& v, Int& out) {
    const auto r = detail::parse_integer(v);
    if (!r) {
      error(line, "malformed integer '" + v + "' for " + key);
      return false;
    }
    out = static_cast<Int>(*r);
    return true;
  }

  void interval(std::size_t line, const std::string& key, const std::string& v, Interval& out) {
    const auto parts = detail::split_list(v);
    if (parts.size() != 2) {
      error(line, key + " expects 'lo, hi'");
      return;
    }
    double lo = 0, hi = 0;
    if (real(line, key, parts[0], lo) && real(line, key, parts[1], hi)) out = {lo, hi};
  }

  void assign(std::size_t ln, const std::string& sec, const std::string& key, const std::string& v) {
    const std::string full = sec + "." + key;
    auto R = [&](double& d) { real(ln, full, v, d); };
    auto I = [&](auto& i) { integer(ln, full, v, i); };
    if (sec == "geometry") {
      if (key == "T") return R(cfg_.T);
      if (key == "family") {
        if (v == "constant") cfg_.ell = EllFamily::constant;
        else if (v == "linear") cfg_.ell = EllFamily::linear;
        else if (v == "sinusoidal") cfg_.ell = EllFamily::sinusoidal;
        else error(ln, "unknown boundary family '" + v + "' (constant, linear, sinusoidal)");
        return;
      }
      if (key == "gamma") return R(cfg_.gamma);
      if (key == "drift_bound") {
        double d = 0;
        if (real(ln, full, v, d)) cfg_.drift_bound = d;
        return;
      }
    } else if (sec == "coefficient") {
      if (key == "alpha") return R(cfg_.alpha);
      if (key == "K") {
        double d = 0;
        if (real(ln, full, v, d)) cfg_.K = d;
        return;
      }
    } else if (sec == "coupling") {
      if (key == "family") {
        if (v == "linear") cfg_.coupling = CouplingFamily::linear;
        else if (v == "bounded-sine") cfg_.coupling = CouplingFamily::bounded_sine;
        else error(ln, "unknown coupling family '" + v + "' (linear, bounded-sine)");
        return;
      }
      if (key.size() == 3 && key[0] == 'c' && (key[1] == '1' || key[1] == '2') && (key[2] == '1' || key[2] == '2'))
        return R(cfg_.c[static_cast<std::size_t>(key[1] - '1')][static_cast<std::size_t>(key[2] - '1')]);
    } else if (sec == "regions") {
      if (key == "O") return interval(ln, full, v, cfg_.O);
      if (key == "O1") return interval(ln, full, v, cfg_.O1);
      if (key == "O2") return interval(ln, full, v, cfg_.O2);
      if (key == "Od") return interval(ln, full, v, cfg_.Od);
    } else if (sec == "follower") {
      if (key == "alpha1") return R(cfg_.follower_alpha[0]);
      if (key == "alpha2") return R(cfg_.follower_alpha[1]);
      if (key == "mu1") return R(cfg_.mu[0]);
      if (key == "mu2") return R(cfg_.mu[1]);
      if (key == "target1_y1") return R(cfg_.target[0][0]);
      if (key == "target1_y2") return R(cfg_.target[0][1]);
      if (key == "target2_y1") return R(cfg_.target[1][0]);
      if (key == "target2_y2") return R(cfg_.target[1][1]);
    } else if (sec == "weights") {
      if (key == "s") return R(cfg_.s);
      if (key == "lambda") {
        if (v == "auto") {
          cfg_.lambda.reset();
          return;
        }
        double d = 0;
        if (real(ln, full, v, d)) cfg_.lambda = d;
        return;
      }
      if (key == "inner_lo") return R(cfg_.inner_lo);
      if (key == "inner_hi") return R(cfg_.inner_hi);
      if (key == "delta_frac") return R(cfg_.delta_frac);
      if (key == "obs_exponent") return R(cfg_.obs_exponent);
    } else if (sec == "discretization") {
      if (key == "n_x") return I(cfg_.n_x);
      if (key == "n_t") return I(cfg_.n_t);
    } else if (sec == "solver") {
      if (key == "tol_nash") return R(cfg_.tol_nash);
      if (key == "max_nash") return I(cfg_.max_nash);
      if (key == "omega") return R(cfg_.omega);
      if (key == "tol_outer") return R(cfg_.tol_outer);
      if (key == "max_outer") return I(cfg_.max_outer);
      if (key == "eps_pen") return R(cfg_.eps_pen);
      if (key == "tol_cg") return R(cfg_.tol_cg);
      if (key == "max_cg") return I(cfg_.max_cg);
      if (key == "full_newton") {
        if (v == "true") cfg_.full_newton = true;
        else if (v == "false") cfg_.full_newton = false;
        else error(ln, "solver.full_newton expects true or false");
        return;
      }
      if (key == "convexity_directions") return I(cfg_.convexity_directions);
      if (key == "seed") return I(cfg_.seed);
    } else if (sec == "initial") {
      if (key == "shape") {
        if (v == "zero") cfg_.initial = InitialShape::zero;
        else if (v == "sine") cfg_.initial = InitialShape::sine;
        else if (v == "bump") cfg_.initial = InitialShape::bump;
        else error(ln, "unknown initial shape '" + v + "' (zero, sine, bump)");
        return;
      }
      if (key == "norm") return R(cfg_.initial_norm);
      if (key == "mode") return I(cfg_.initial_mode);
    } else if (sec == "observability") {
      if (key == "samples") return I(cfg_.obs_samples);
      if (key == "modes") return I(cfg_.obs_modes);
    } else if (sec == "sweep") {
      if (key == "command") {
        if (v == "check-weights" || v == "simulate" || v == "nash" || v == "control" || v == "observability")
          cfg_.sweep_command = v;
        else error(ln, "sweep.command must be one of check-weights, simulate, nash, control, observability");
        return;
      }
      if (key == "key") {
        cfg_.sweep_key = v;
        return;
      }
      if (key == "values") {
        cfg_.sweep_values.clear();
        for (const auto& part : detail::split_list(v)) {
          double d = 0;
          if (real(ln, full, part, d)) cfg_.sweep_values.push_back(d);
        }
        return;
      }
    }
    error(ln, "unknown key '" + full + "'");
  }

  ProblemConfig& cfg_;
  std::vector<std::string> errors_;
};

inline void validate(const ProblemConfig& c, std::vector<std::string>& errs) {
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  need(c.T > 0.0, "geometry.T must be positive");
  if (c.ell == EllFamily::linear) need(1.0 + c.gamma * c.T > 0.0, "geometry.gamma makes l(t) = 1 + gamma t vanish on [0,T]");
  if (c.ell == EllFamily::sinusoidal) need(std::abs(c.gamma) < 1.0, "geometry.gamma must satisfy |gamma| < 1 for the sinusoidal family");
  if (c.alpha >= 1.0) errs.push_back("coefficient.alpha: strongly degenerate coefficient (alpha >= 1) unsupported");
  else need(c.alpha > 0.0, "coefficient.alpha must lie in (0,1)");
  if (c.K) need(*c.K > 0.0 && *c.K <= 1.0, "coefficient.K must lie in (0,1]");
  const std::pair<const char*, Interval> ivs[] = {{"O", c.O}, {"O1", c.O1}, {"O2", c.O2}, {"Od", c.Od}};
  for (const auto& [name, iv] : ivs)
    need(0.0 < iv.lo && iv.lo < iv.hi && iv.hi < 1.0, std::string("regions.") + name + " must satisfy 0 < lo < hi < 1");
  need(c.Od.overlaps(c.O), "regions.Od must intersect regions.O (observation region has to meet the leader region)");
  for (int i = 0; i < 2; ++i) {
    const auto k = static_cast<std::size_t>(i);
    need(c.follower_alpha[k] >= 0.0, "follower.alpha" + std::to_string(i + 1) + " must be nonnegative");
    need(c.mu[k] > 0.0, "follower.mu" + std::to_string(i + 1) + " must be positive");
  }
  need(c.s > 0.0, "weights.s must be positive");
  if (c.lambda) need(*c.lambda > 0.0, "weights.lambda must be positive or auto");
  need(0.0 < c.inner_lo && c.inner_lo < c.inner_hi && c.inner_hi < 1.0, "weights.inner_lo/inner_hi must satisfy 0 < lo < hi < 1");
  need(c.inner_lo > c.O.lo && c.inner_hi < c.O.hi, "weights inner window must lie inside regions.O");
  need(c.delta_frac > 0.0 && c.delta_frac < 0.1, "weights.delta_frac must lie in (0, 0.1)");
  need(c.obs_exponent >= 0.0, "weights.obs_exponent must be nonnegative");
  need(c.n_x >= 4, "discretization.n_x must be at least 4");
  need(c.n_t >= 4, "discretization.n_t must be at least 4");
  need(c.tol_nash > 0.0, "solver.tol_nash must be positive");
  need(c.max_nash >= 1, "solver.max_nash must be at least 1");
  need(c.omega > 0.0 && c.omega <= 1.0, "solver.omega must lie in (0,1]");
  need(c.tol_outer > 0.0, "solver.tol_outer must be positive");
  need(c.max_outer >= 1, "solver.max_outer must be at least 1");
  need(c.eps_pen > 0.0, "solver.eps_pen must be positive");
  need(c.tol_cg > 0.0, "solver.tol_cg must be positive");
  need(c.max_cg >= 1, "solver.max_cg must be at least 1");
  need(c.convexity_directions >= 1, "solver.convexity_directions must be at least 1");
  need(c.initial_norm >= 0.0, "initial.norm must be nonnegative");
  need(c.initial_mode >= 1, "initial.mode must be at least 1");
  need(c.obs_samples >= 1, "observability.samples must be at least 1");
  need(c.obs_modes >= 1, "observability.modes must be at least 1");
  if (!c.sweep_key.empty()) need(!c.sweep_values.empty(), "sweep.values must list at least one value");
}

// Parses and validates, collecting every problem before throwing.
inline ProblemConfig parse_config(std::string_view text) {
  ProblemConfig cfg;
  ConfigReader reader(cfg);
  reader.feed(text);
  auto errs = std::move(reader.errors());
  validate(cfg, errs);
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string emit_config(const ProblemConfig& c) {
  using detail::format_real;
  std::ostringstream o;
  auto iv = [](const Interval& i) { return format_real(i.lo) + ", " + format_real(i.hi); };
  o << "[geometry]\nT = " << format_real(c.T) << "\nfamily = " << to_string(c.ell) << "\ngamma = " << format_real(c.gamma)
    << "\n";
  if (c.drift_bound) o << "drift_bound = " << format_real(*c.drift_bound) << "\n";
  o << "\n[coefficient]\nalpha = " << format_real(c.alpha) << "\n";
  if (c.K) o << "K = " << format_real(*c.K) << "\n";
  o << "\n[coupling]\nfamily = " << to_string(c.coupling) << "\n";
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      o << "c" << i + 1 << j + 1 << " = " << format_real(c.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) << "\n";
  o << "\n[regions]\nO = " << iv(c.O) << "\nO1 = " << iv(c.O1) << "\nO2 = " << iv(c.O2) << "\nOd = " << iv(c.Od) << "\n";
  o << "\n[follower]\n";
  for (int i = 0; i < 2; ++i) {
    const auto k = static_cast<std::size_t>(i);
    o << "alpha" << i + 1 << " = " << format_real(c.follower_alpha[k]) << "\n";
    o << "mu" << i + 1 << " = " << format_real(c.mu[k]) << "\n";
    o << "target" << i + 1 << "_y1 = " << format_real(c.target[k][0]) << "\n";
    o << "target" << i + 1 << "_y2 = " << format_real(c.target[k][1]) << "\n";
  }
  o << "\n[weights]\ns = " << format_real(c.s) << "\nlambda = " << (c.lambda ? format_real(*c.lambda) : "auto")
    << "\ninner_lo = " << format_real(c.inner_lo) << "\ninner_hi = " << format_real(c.inner_hi)
    << "\ndelta_frac = " << format_real(c.delta_frac) << "\nobs_exponent = " << format_real(c.obs_exponent) << "\n";
  o << "\n[discretization]\nn_x = " << c.n_x << "\nn_t = " << c.n_t << "\n";
  o << "\n[solver]\ntol_nash = " << format_real(c.tol_nash) << "\nmax_nash = " << c.max_nash
    << "\nomega = " << format_real(c.omega) << "\ntol_outer = " << format_real(c.tol_outer)
    << "\nmax_outer = " << c.max_outer << "\neps_pen = " << format_real(c.eps_pen) << "\ntol_cg = " << format_real(c.tol_cg)
    << "\nmax_cg = " << c.max_cg << "\nfull_newton = " << (c.full_newton ? "true" : "false")
    << "\nconvexity_directions = " << c.convexity_directions << "\nseed = " << c.seed << "\n";
  o << "\n[initial]\nshape = " << to_string(c.initial) << "\nnorm = " << format_real(c.initial_norm)
    << "\nmode = " << c.initial_mode << "\n";
  o << "\n[observability]\nsamples = " << c.obs_samples << "\nmodes = " << c.obs_modes << "\n";
  if (!c.sweep_key.empty() || c.sweep_command != "nash") {
    o << "\n[sweep]\ncommand = " << c.sweep_command << "\nkey = " << c.sweep_key << "\nvalues = ";
    for (std::size_t k = 0; k < c.sweep_values.size(); ++k) o << (k ? ", " : "") << format_real(c.sweep_values[k]);
    o << "\n";
  }
  return o.str();
}

// Applies "section.key = value" to an existing config (used by sweeps).
inline ProblemConfig with_override(const ProblemConfig& base, const std::string& dotted_key, double value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError({"sweep.key must look like section.key, got '" + dotted_key + "'"});
  ProblemConfig out = base;
  ConfigReader reader(out);
  const std::string key = dotted_key.substr(dot + 1);
  std::string v = detail::format_real(value);
  if (key == "n_x" || key == "n_t" || key == "max_nash" || key == "max_outer" || key == "max_cg" || key == "mode" ||
      key == "samples" || key == "modes" || key == "seed" || key == "convexity_directions") {
    if (value != std::floor(value)) throw ConfigError({"sweep value for " + dotted_key + " must be an integer"});
    v = std::to_string(static_cast<long long>(value));
  }
  reader.feed("[" + dotted_key.substr(0, dot) + "]\n" + key + " = " + v + "\n");
  auto errs = std::move(reader.errors());
  validate(out, errs);
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return out;
}

}  // namespace snash

#endif  // SNASH_CONFIG_HPP

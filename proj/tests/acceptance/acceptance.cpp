// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "manufactured.hpp"
#include "oracles.hpp"
#include "snash/leader_control.hpp"
#include "snash/run.hpp"
#include "snash/spacetime.hpp"

using namespace snash;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

const Mat2 kC{{{0.5, 0.3}, {0.5, 0.3}}};

TransformedCoefficients moving_tc() {
  return {DegenerateDiffusion(0.5), MovingDomain(1.0, EllFamily::linear, 0.2, 0.2)};
}

Linearization trajectory_linearization(const Grid& g, const TransformedCoefficients& tc, const CouplingF& F) {
  std::mt19937_64 rng(11);
  StatePair y0 = fixtures::random_pair(g, rng, true);
  StatePair src(g);
  for (int n = 1; n <= g.n_t; ++n)
    for (int j = 1; j <= g.n_x; ++j) src.y1(n, j) = std::sin(3.0 * g.x(j)) * g.t(n);
  return Linearization::along(g, F, solve_forward(g, tc, F, y0, src), StepOptions{});
}

Verdict duality() {
  const auto tc = moving_tc();
  const auto F = CouplingF::bounded_sine(kC);
  const Grid small(16, 32, 1.0);
  const auto lin_s = trajectory_linearization(small, tc, F);
  const Eigen::SparseMatrix<double> LT = Eigen::SparseMatrix<double>(assemble_forward_matrix(small, tc, lin_s).transpose());
  const Eigen::SparseMatrix<double> B = assemble_backward_matrix(small, tc, lin_s);
  const double entry = (Eigen::MatrixXd(B) - Eigen::MatrixXd(LT)).cwiseAbs().maxCoeff();

  const Grid g(64, 128, 1.0);
  const auto lin = trajectory_linearization(g, tc, F);
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const StatePair w = fixtures::random_pair(g, rng), p = fixtures::random_pair(g, rng);
    const double a = spacetime_dot(g, apply_forward_operator(g, tc, lin, w), p);
    const double b = spacetime_dot(g, w, apply_backward_operator(g, tc, lin, p));
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
  }
  return {entry <= 1e-12 && worst <= 1e-10, "max entry diff " + fmt("%.3g", entry) + ", max bilinear rel " + fmt("%.3g", worst)};
}

Verdict weight_identities() {
  const Psi psi = build_psi(DegenerateDiffusion(0.5), CarlemanParameters{});
  const double lambda0 = scan_lambda0(psi, 1.0, 1.0);
  const WeightFamily w(psi, 1.0, 1.0, lambda0);
  const RhoFamily rho(w);
  const auto rep = verify_orderings(rho, w, truncated_time_grid(1.0, 1001, 0.01));
  return {rep.ok(), "lambda0 " + fmt("%.3g", lambda0) + ", identity " + fmt("%.3g", rep.max_identity_residual) + ", min margin " +
                        fmt("%.3g", rep.min_margin) + ", rho_star excess " + fmt("%.3g", rep.rho_star_bound_excess)};
}

double field_diff(const Field& a, const Field& b, const Grid& g) {
  double m = 0.0;
  for (int n = 1; n <= g.n_t; ++n)
    for (int j = 1; j <= g.n_x; ++j) m = std::max(m, std::abs(a(n, j) - b(n, j)));
  return m;
}

Verdict nash_oracle() {
  const Setup S = make_setup(fixtures::nash_config(16, 32, 10.0));
  const Problem& P = S.problem;
  const NashResult R = solve_nash(nullptr, P, {0.7, 1e-12, 200});
  const auto ref = oracle::nash_kkt(P, P.F.c());
  double m = std::max(field_diff(R.state.y1, ref.y.y1, P.grid), field_diff(R.state.y2, ref.y.y2, P.grid));
  for (std::size_t i = 0; i < 2; ++i) m = std::max(m, field_diff(R.v[i], ref.v[i], P.grid));
  return {R.converged && m <= 1e-8, std::to_string(R.iterations) + " iterations, max entry diff " + fmt("%.3g", m)};
}

Verdict stationarity() {
  auto c = fixtures::nash_config(32, 64, 10.0);
  c.coupling = CouplingFamily::bounded_sine;
  const Setup S = make_setup(c);
  const Problem& P = S.problem;
  const NashResult R = solve_nash(nullptr, P, {0.7, 1e-12, 200});
  std::mt19937_64 rng(17);
  double worst_stat = 0.0;
  for (int k = 0; k < 10; ++k)
    for (int i = 0; i < 2; ++i) {
      const Field d = random_direction(i, P, rng);
      const Mask m = P.follower_mask(i);
      double scale = 0.0;
      for (int n = 1; n <= P.grid.n_t; ++n)
        for (int j = m.j_lo; j <= m.j_hi; ++j) scale += std::abs(R.adjoint.p[i].y1(n, j) * d(n, j));
      scale *= P.grid.dt() * P.grid.dx();
      worst_stat = std::max(worst_stat, std::abs(directional_derivative_J(i, d, R, P)) / scale);
    }

  // gradient check away from the equilibrium
  NashResult at;
  at.v = R.v;
  for (std::size_t i = 0; i < 2; ++i)
    for (double& v : at.v[i].values()) v *= 0.5;
  solve_state_and_adjoints(P, nullptr, at.v, at.state, at.adjoint);
  const double eps = 1e-5;
  double worst_fd = 0.0;
  for (int k = 0; k < 5; ++k)
    for (int i = 0; i < 2; ++i) {
      const Field d = random_direction(i, P, rng);
      auto plus = at.v, minus = at.v;
      for (std::size_t m = 0; m < d.values().size(); ++m) {
        plus[static_cast<std::size_t>(i)].values()[m] += eps * d.values()[m];
        minus[static_cast<std::size_t>(i)].values()[m] -= eps * d.values()[m];
      }
      const double fd = (evaluate_J_at(i, nullptr, plus, P) - evaluate_J_at(i, nullptr, minus, P)) / (2 * eps);
      const double ad = directional_derivative_J(i, d, at, P);
      worst_fd = std::max(worst_fd, std::abs(fd - ad) / std::abs(ad));
    }
  return {R.converged && worst_stat <= 1e-6 && worst_fd <= 1e-4,
          "max |J'|/scale " + fmt("%.3g", worst_stat) + ", max adjoint-vs-FD rel " + fmt("%.3g", worst_fd)};
}

Verdict convexity() {
  std::string detail;
  bool ok = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (double mu : {1.0, 10.0, 100.0, 1000.0}) {
    const Setup S = make_setup(fixtures::nash_config(16, 32, mu));
    const NashResult R = solve_nash(nullptr, S.problem);
    ok = ok && R.converged;
    double q = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 2; ++i) {
      const auto est = estimate_convexity(i, R, 100, S.problem, 5);
      q = std::min(q, est.min_quotient);
      if (mu == 1000.0) ok = ok && est.min_quotient >= 0.5 * mu * est.min_rho_star_sq;
    }
    ok = ok && q >= prev;
    prev = q;
    detail += (detail.empty() ? "" : ", ") + std::string("mu ") + fmt("%g", mu) + ": " + fmt("%.4g", q);
  }
  return {ok, "min quotients " + detail};
}

Verdict null_control() {
  auto base = load_config(std::string(SNASH_CONFIG_DIR) + "/null_control.ini");
  const Setup S = make_setup(base);
  const OptimalitySystem K(S.problem, S.problem.F.c());
  ControlOptions opt{base.eps_pen, base.tol_cg, base.max_cg, base.tol_outer, base.max_outer};
  const ControlResult R = solve_semilinear_control(K, nullptr, opt);
  const double target = 1e-3 * base.initial_norm;
  const WeightedNormReport rep = weighted_norm_report(R, S.problem, *S.rho);

  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  std::string sweep;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    ControlOptions o = opt;
    o.eps_pen = eps;
    const double t = solve_semilinear_control(K, nullptr, o).terminal_norm;
    monotone = monotone && t <= prev;
    prev = t;
    sweep += (sweep.empty() ? "" : " ") + fmt("%.2e", t);
  }

  auto fine = base;
  fine.n_x = 128;
  fine.n_t = 256;
  const Setup SF = make_setup(fine);
  const OptimalitySystem KF(SF.problem, SF.problem.F.c());
  const ControlResult RF = solve_semilinear_control(KF, nullptr, opt);
  const WeightedNormReport repF = weighted_norm_report(RF, SF.problem, *SF.rho);
  const double dlog = std::abs(rep.log_ratio - repF.log_ratio);

  const bool ok = R.terminal_norm <= target && monotone && std::isfinite(dlog) && dlog <= std::log(3.0);
  return {ok, "s " + fmt("%g", base.s) + ", terminal " + fmt("%.3e", R.terminal_norm) + " (target " + fmt("%.1e", target) +
                  "), eps sweep [" + sweep + "], kappa0-ratio factor " + fmt("%.3f", std::exp(dlog))};
}

Verdict observability() {
  const auto base = load_config(std::string(SNASH_CONFIG_DIR) + "/observability.ini");
  double logs[2];
  bool finite = true;
  const std::pair<int, int> grids[2] = {{64, 128}, {128, 256}};
  for (int k = 0; k < 2; ++k) {
    auto c = base;
    c.n_x = grids[k].first;
    c.n_t = grids[k].second;
    const Setup S = make_setup(c);
    const OptimalitySystem K(S.problem, S.problem.F.c());
    ObservabilityOptions o{c.obs_samples, c.obs_modes, c.obs_exponent, 1};
    const auto rep = observability_ratio(K, *S.rho, o);
    logs[k] = rep.max_log_ratio;
    finite = finite && !rep.violation && std::isfinite(rep.max_log_ratio);
  }
  const double d = std::abs(logs[0] - logs[1]);
  return {finite && d <= std::log(2.0), "s " + fmt("%g", base.s) + ", max ln ratio " + fmt("%.4f", logs[0]) + " vs " +
                                            fmt("%.4f", logs[1]) + ", factor " + fmt("%.4f", std::exp(d))};
}

Verdict fixed_domain() {
  const int n = 64, nt = 128;
  const Grid g(n, nt, 1.0);
  const TransformedCoefficients tc(DegenerateDiffusion(0.5), MovingDomain::fixed(1.0));
  double coeff = 0.0;
  for (int k = 0; k <= nt; ++k) coeff = std::max({coeff, std::abs(tc.b(g.t(k)) - 1.0), std::abs(tc.drift_rate(g.t(k)))});
  StatePair y0(g);
  Eigen::VectorXd v0(2 * n);
  for (int j = 1; j <= n; ++j) {
    const double x = g.x(j);
    y0.y1(0, j) = v0[j - 1] = std::sin(M_PI * x);
    y0.y2(0, j) = v0[n + j - 1] = 3.0 * x * (1 - x);
  }
  const auto y = solve_forward(g, tc, CouplingF::linear(kC), y0, StatePair(g));
  const auto ref = oracle::fixed_domain_linear(0.5, kC, n, nt, 1.0, v0);
  double err = 0.0;
  for (int k = 0; k <= nt; ++k)
    for (int j = 1; j <= n; ++j)
      err = std::max({err, std::abs(y.y1(k, j) - ref[static_cast<std::size_t>(k)][j - 1]),
                      std::abs(y.y2(k, j) - ref[static_cast<std::size_t>(k)][n + j - 1])});
  return {coeff == 0.0 && err <= 1e-12, "max diff " + fmt("%.3g", err)};
}

Verdict convergence() {
  const auto sp = manufactured::observed_orders([](int n) { return manufactured::space_error(n, 4); }, {19, 39, 79, 159});
  const auto tm = manufactured::observed_orders([](int nt) { return manufactured::time_error(31, nt); }, {16, 32, 64, 128});
  const double s = *std::min_element(sp.begin(), sp.end()), t = *std::min_element(tm.begin(), tm.end());
  return {s >= 1.5 && t >= 0.9, "min space order " + fmt("%.3f", s) + ", min time order " + fmt("%.3f", t)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SNASH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

bool same_csvs(const fs::path& a, const fs::path& b, std::size_t& count) {
  bool same = true;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    same = same && fixtures::slurp(e.path()) == fixtures::slurp(b / fs::relative(e.path(), a));
    ++count;
  }
  return same;
}

Verdict determinism() {
  const auto dir = fixtures::scratch_dir("acceptance_determinism");
  const std::string cfg = SNASH_CONFIG_DIR;
  bool ok = true;
  std::size_t count = 0;
  for (const char* sub : {"a", "b"}) {
    const fs::path d = dir / sub;
    ok = ok && run(RunRequest{"nash", fs::path(cfg + "/nash_linear.ini"), d / "nash", 3u, 1}).exit_code == 0;
    ok = ok && run_cli("sweep --config " + cfg + "/sweep_mu.ini --seed 3 --threads 2 --out " + (d / "sweep").string()) == 0;
    ok = ok && run_cli("control --config " + cfg + "/null_control.ini --seed 3 --out " + (d / "control").string()) == 0;
  }
  ok = ok && same_csvs(dir / "a", dir / "b", count);
  return {ok && count > 0, std::to_string(count) + " CSV files compared"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"discrete duality", duality},
      {"weight identities", weight_identities},
      {"Nash oracle equivalence", nash_oracle},
      {"stationarity", stationarity},
      {"convexity", convexity},
      {"null control", null_control},
      {"observability", observability},
      {"fixed-domain reduction", fixed_domain},
      {"convergence", convergence},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2zu %-24s %s  %s  [%.1f s]\n", k + 1, criteria[k].first, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

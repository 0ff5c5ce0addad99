#ifndef SNASH_RUN_HPP
#define SNASH_RUN_HPP

#include <Eigen/Core>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "snash/csv.hpp"
#include "snash/leader_control.hpp"
#include "snash/setup.hpp"

#ifndef SNASH_VERSION
#define SNASH_VERSION "0.0.0"
#endif

namespace snash {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3 };

// One summary row: column names with values, written as summary.csv and
// collected by sweeps.
using Summary = std::vector<std::pair<std::string, CsvCell>>;

inline void write_summary(const fs::path& path, const Summary& s) {
  std::vector<std::string> head;
  std::vector<CsvCell> row;
  for (const auto& [k, v] : s) {
    head.push_back(k);
    row.push_back(v);
  }
  CsvWriter w(path, head);
  w.row(row);
}

inline void write_fields(const fs::path& path, const Grid& g, const std::vector<std::string>& names,
                         const std::vector<const Field*>& fields) {
  std::vector<std::string> head{"n", "t", "j", "x"};
  head.insert(head.end(), names.begin(), names.end());
  CsvWriter w(path, head);
  std::vector<CsvCell> row(head.size());
  for (int n = 0; n <= g.n_t; ++n)
    for (int j = 0; j <= g.n_x + 1; ++j) {
      row[0] = static_cast<long long>(n);
      row[1] = g.t(n);
      row[2] = static_cast<long long>(j);
      row[3] = g.x(j);
      for (std::size_t k = 0; k < fields.size(); ++k) row[4 + k] = (*fields[k])(n, j);
      w.row(row);
    }
}

inline void write_history(const fs::path& path, const std::vector<double>& h) {
  CsvWriter w(path, {"iteration", "value"});
  for (std::size_t k = 0; k < h.size(); ++k) w.row({static_cast<long long>(k), h[k]});
}

inline long long as_int(bool b) { return b ? 1 : 0; }

// ---- subcommands ----

inline Summary cmd_check_weights(const Setup& S, const fs::path& out) {
  const auto& c = S.cfg;
  const auto times = truncated_time_grid(c.T, c.n_t + 1, c.delta_frac);
  const WeightFamily& w = S.rho->weights();
  const OrderingsReport rep = verify_orderings(*S.rho, w, times);
  const HypothesisReport hyp = check_hypotheses(S.diffusion, S.domain, 1001);
  const double lambda0 = scan_lambda0(w.psi(), c.T, c.s);
  {
    CsvWriter cw(out / "weights.csv", {"t", "A_star", "A_hat", "margin", "log_rho0", "log_rho1", "log_rho2",
                                        "log_rho_hat", "log_rho_star", "identity_residual"});
    for (const auto& r : rep.rows)
      cw.row({r.t, r.A_star, r.A_hat, r.margin, r.rho0.log(), r.rho1.log(), r.rho2.log(), r.rho_hat.log(),
              S.rho->rho_star(r.t).log(), r.identity_residual});
  }
  Summary s{{"lambda", S.lambda},
            {"lambda0", lambda0},
            {"s", c.s},
            {"min_margin", rep.min_margin},
            {"min_margin_t", rep.min_margin_t},
            {"max_identity_residual", rep.max_identity_residual},
            {"rho_star_bound_excess", rep.rho_star_bound_excess},
            {"log_c_rho1_rho_hat", rep.log_order_constants[0]},
            {"log_c_rho_hat_rho0", rep.log_order_constants[1]},
            {"log_c_rho0_rho2", rep.log_order_constants[2]},
            {"log_c_rho2_rho1sq", rep.log_order_constants[3]},
            {"coefficient_violation", hyp.coefficient_violation},
            {"drift_violation", hyp.drift_violation},
            {"ok", as_int(rep.ok() && hyp.ok())}};
  write_summary(out / "summary.csv", s);
  if (!rep.ok() || !hyp.ok()) throw SolverError("weight or hypothesis checks failed; see summary.csv", {});
  return s;
}

inline Summary cmd_simulate(const Setup& S, const fs::path& out) {
  const Problem& P = S.problem;
  const StatePair y = solve_forward(P.grid, P.tc, P.F, P.initial, StatePair(P.grid), P.step);
  write_fields(out / "trajectory.csv", P.grid, {"y1", "y2"}, {&y.y1, &y.y2});
  Summary s{{"initial_norm", std::sqrt(l2_norm_sq(y.y1.level(0), P.grid.dx()) + l2_norm_sq(y.y2.level(0), P.grid.dx()))},
            {"terminal_norm", terminal_norm(y, P.grid)}};
  write_summary(out / "summary.csv", s);
  return s;
}

inline Summary cmd_nash(const Setup& S, const fs::path& out, std::uint64_t seed) {
  const Problem& P = S.problem;
  const NashResult R = solve_nash(nullptr, P, nash_options(S.cfg));
  write_fields(out / "trajectory.csv", P.grid, {"y1", "y2"}, {&R.state.y1, &R.state.y2});
  write_fields(out / "adjoint.csv", P.grid, {"p1_1", "p1_2", "p2_1", "p2_2"},
               {&R.adjoint.p[0].y1, &R.adjoint.p[0].y2, &R.adjoint.p[1].y1, &R.adjoint.p[1].y2});
  write_fields(out / "controls.csv", P.grid, {"v1", "v2"}, {&R.v[0], &R.v[1]});
  write_history(out / "nash_history.csv", R.history);
  Summary s{{"J1", R.J[0]},
            {"J2", R.J[1]},
            {"residual1", R.residual[0]},
            {"residual2", R.residual[1]},
            {"iterations", static_cast<long long>(R.iterations)},
            {"converged", as_int(R.converged)}};
  if (!R.converged) {
    write_summary(out / "summary.csv", s);
    throw SolverError("Nash fixed point did not converge within max_nash iterations", R.history);
  }
  CsvWriter cw(out / "convexity.csv", {"follower", "direction", "quotient"});
  for (int i = 0; i < 2; ++i) {
    const ConvexityEstimate e = estimate_convexity(i, R, S.cfg.convexity_directions, P, seed + static_cast<std::uint64_t>(i));
    for (std::size_t k = 0; k < e.quotients.size(); ++k)
      cw.row({static_cast<long long>(i + 1), static_cast<long long>(k), e.quotients[k]});
    s.emplace_back("min_quotient" + std::to_string(i + 1), e.min_quotient);
    if (i == 0) s.emplace_back("min_rho_star_sq", e.min_rho_star_sq);
  }
  write_summary(out / "summary.csv", s);
  return s;
}

inline ControlOptions control_options(const ProblemConfig& c) {
  return {c.eps_pen, c.tol_cg, c.max_cg, c.tol_outer, c.max_outer};
}

inline Summary cmd_control(const Setup& S, const fs::path& out) {
  const Problem& P = S.problem;
  const OptimalitySystem K(P, P.F.c());
  const ControlResult R = solve_semilinear_control(K, nullptr, control_options(S.cfg));
  const WeightedNormReport rep = weighted_norm_report(R, P, *S.rho);
  write_fields(out / "trajectory.csv", P.grid, {"y1", "y2"}, {&R.y.y1, &R.y.y2});
  write_fields(out / "adjoint.csv", P.grid, {"p1_1", "p1_2", "p2_1", "p2_2"},
               {&R.p.p[0].y1, &R.p.p[0].y2, &R.p.p[1].y1, &R.p.p[1].y2});
  write_fields(out / "controls.csv", P.grid, {"h", "v1", "v2"}, {&R.h, &R.v[0], &R.v[1]});
  {
    CsvWriter cw(out / "cg_history.csv", {"iteration", "relative_residual", "phi"});
    for (std::size_t k = 0; k < R.cg_residuals.size(); ++k)
      cw.row({static_cast<long long>(k), R.cg_residuals[k], R.phi_history[k]});
  }
  write_history(out / "outer_history.csv", R.outer_updates);
  Summary s{{"terminal_norm", R.terminal_norm},
            {"linear_terminal_norm", R.linear_terminal_norm},
            {"control_cost", R.control_cost},
            {"cg_iterations", static_cast<long long>(R.cg_iterations)},
            {"outer_iterations", static_cast<long long>(R.outer_iterations)},
            {"log_y_rho0", rep.log_y_rho0},
            {"log_p_rho0", rep.log_p_rho0},
            {"log_h_rho1", rep.log_h_rho1},
            {"log_sup_y_rho_hat", rep.log_sup_y_rho_hat},
            {"log_sup_p_rho_hat", rep.log_sup_p_rho_hat},
            {"log_grad_y_rho_hat", rep.log_grad_y_rho_hat},
            {"log_grad_p_rho_hat", rep.log_grad_p_rho_hat},
            {"log_kappa0", rep.log_kappa0},
            {"log_ratio", rep.log_ratio}};
  write_summary(out / "summary.csv", s);
  return s;
}

inline Summary cmd_observability(const Setup& S, const fs::path& out, std::uint64_t seed) {
  const Problem& P = S.problem;
  const OptimalitySystem K(P, P.F.c());
  ObservabilityOptions o{S.cfg.obs_samples, S.cfg.obs_modes, S.cfg.obs_exponent, seed};
  const ObservabilityReport rep = observability_ratio(K, *S.rho, o);
  CsvWriter cw(out / "observability.csv", {"sample_id", "lhs", "rhs", "ratio", "log_rhs", "log_ratio"});
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    const auto& smp = rep.samples[k];
    const double ratio = smp.lhs == 0.0 ? 0.0 : std::exp(smp.log_ratio);
    cw.row({static_cast<long long>(k), smp.lhs, std::exp(smp.log_rhs), ratio, smp.log_rhs, smp.log_ratio});
  }
  Summary s{{"samples", static_cast<long long>(rep.samples.size())},
            {"max_log_ratio", rep.max_log_ratio},
            {"violation", as_int(rep.violation)}};
  write_summary(out / "summary.csv", s);
  if (rep.violation) throw SolverError("observability violation: zero right-hand side with nonzero left-hand side", {});
  return s;
}

// ---- orchestration ----

struct RunRequest {
  std::string command;
  std::optional<fs::path> config;
  fs::path out = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct RunOutcome {
  int exit_code = exit_ok;
  std::string status = "ok";
  std::string message;
  std::vector<std::string> details;
  Summary summary;
};

inline std::string compiler_id() {
#if defined(__clang__)
  return std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  return std::string("gcc ") + __VERSION__;
#else
  return "unknown";
#endif
}

inline void write_manifest(const fs::path& out, const RunRequest& req, const RunOutcome& res,
                           const std::optional<ProblemConfig>& cfg, std::uint64_t seed, double wall) {
  std::ofstream m(out / "manifest.ini", std::ios::binary | std::ios::trunc);
  m << "[run]\ncommand = " << req.command << "\nstatus = " << res.status << "\nexit_code = " << res.exit_code
    << "\nseed = " << seed << "\nthreads = " << req.threads << "\nconfig_path = " << (req.config ? req.config->string() : "")
    << "\nwall_time_s = " << csv_format(wall) << "\nversion = " << SNASH_VERSION << "\ncompiler = " << compiler_id()
    << "\neigen = " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n";
  if (res.exit_code != exit_ok) {
    m << "\n[error]\nmessage = " << res.message << "\n";
    for (std::size_t k = 0; k < res.details.size(); ++k) m << "detail" << k + 1 << " = " << res.details[k] << "\n";
  }
  if (cfg) m << "\n" << emit_config(*cfg);
}

inline Summary dispatch(const std::string& command, const Setup& S, const fs::path& out, std::uint64_t seed) {
  if (command == "check-weights") return cmd_check_weights(S, out);
  if (command == "simulate") return cmd_simulate(S, out);
  if (command == "nash") return cmd_nash(S, out, seed);
  if (command == "control") return cmd_control(S, out);
  if (command == "observability") return cmd_observability(S, out, seed);
  throw ConfigError("unknown subcommand '" + command + "'");
}

// Runs one configuration in `out`; never throws. The manifest is written last
// so that it records the outcome.
inline RunOutcome run_one(const RunRequest& req, const std::function<ProblemConfig()>& load) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome res;
  std::optional<ProblemConfig> cfg;
  std::uint64_t seed = req.seed.value_or(0);
  std::error_code ec;
  fs::create_directories(req.out, ec);
  try {
    cfg = load();
    if (req.seed) cfg->seed = *req.seed;
    seed = cfg->seed;
    const Setup S = make_setup(*cfg);
    res.summary = dispatch(req.command, S, req.out, seed);
  } catch (const ConfigError& e) {
    res = {exit_config, "config-error", "invalid configuration", e.messages(), {}};
  } catch (const DomainError& e) {
    res = {exit_config, "config-error", e.what(), {}, {}};
  } catch (const SolverError& e) {
    res = {exit_solver, "solver-error", e.what(), {}, {}};
    if (!e.history().empty()) {
      try {
        write_history(req.out / "error_history.csv", e.history());
      } catch (const std::exception&) {
      }
    }
  } catch (const std::exception& e) {
    res = {exit_solver, "solver-error", e.what(), {}, {}};
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(req.out, req, res, cfg, seed, wall);
  return res;
}

inline ProblemConfig load_or_default(const std::optional<fs::path>& path) {
  if (!path) {
    ProblemConfig c;
    std::vector<std::string> errs;
    validate(c, errs);
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return c;
  }
  return load_config(path->string());
}

// Sweep: one run directory per value of sweep.key, executed by a pool of
// workers, then an aggregate CSV in input order.
inline RunOutcome run_sweep(const RunRequest& req) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome res;
  std::optional<ProblemConfig> base;
  std::error_code ec;
  fs::create_directories(req.out, ec);
  std::uint64_t seed = req.seed.value_or(0);
  try {
    base = load_or_default(req.config);
    if (req.seed) base->seed = *req.seed;
    seed = base->seed;
    if (base->sweep_key.empty()) throw ConfigError("sweep needs a [sweep] section with key and values");
    const auto& values = base->sweep_values;
    std::vector<ProblemConfig> members;
    for (double v : values) members.push_back(with_override(*base, base->sweep_key, v));

    std::vector<RunOutcome> outcomes(members.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k; (k = next.fetch_add(1)) < members.size();) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu", k);
        RunRequest sub{base->sweep_command, std::nullopt, req.out / name, members[k].seed, 1};
        outcomes[k] = run_one(sub, [&members, k] { return members[k]; });
      }
    };
    const int n_workers = std::max(1, std::min<int>(req.threads, static_cast<int>(members.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<std::string> head{"run", "key", "value", "exit_code"};
    std::size_t width = 0;
    for (const auto& o : outcomes)
      if (o.exit_code == exit_ok && !o.summary.empty()) {
        for (const auto& kv : o.summary) head.push_back(kv.first);
        width = o.summary.size();
        break;
      }
    CsvWriter agg(req.out / "sweep.csv", head);
    bool all_ok = true;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      std::vector<CsvCell> row{static_cast<long long>(k), base->sweep_key, values[k],
                               static_cast<long long>(outcomes[k].exit_code)};
      const bool ok = outcomes[k].exit_code == exit_ok && outcomes[k].summary.size() == width;
      for (std::size_t c = 0; c < width; ++c) row.push_back(ok ? outcomes[k].summary[c].second : CsvCell{std::string()});
      agg.row(row);
      all_ok = all_ok && outcomes[k].exit_code == exit_ok;
    }
    if (!all_ok) {
      res = {exit_solver, "solver-error", "one or more sweep members failed; see run_*/manifest.ini", {}, {}};
    }
  } catch (const ConfigError& e) {
    res = {exit_config, "config-error", "invalid configuration", e.messages(), {}};
  } catch (const DomainError& e) {
    res = {exit_config, "config-error", e.what(), {}, {}};
  } catch (const std::exception& e) {
    res = {exit_solver, "solver-error", e.what(), {}, {}};
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(req.out, req, res, base, seed, wall);
  return res;
}

inline RunOutcome run(const RunRequest& req) {
  if (req.command == "sweep") return run_sweep(req);
  return run_one(req, [&req] { return load_or_default(req.config); });
}

}  // namespace snash

#endif  // SNASH_RUN_HPP

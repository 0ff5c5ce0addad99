#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "snash/run.hpp"

using namespace snash;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SNASH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string config_path(const std::string& name) { return std::string(SNASH_CONFIG_DIR) + "/" + name; }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream o(p, std::ios::binary);
  o << s;
}

std::vector<std::string> config_errors(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.messages();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const ProblemConfig c = parse_config("");
  EXPECT_EQ(c, ProblemConfig{});
}

TEST(Config, ErrorsCarryLineNumbers) {
  const auto errs = config_errors("[geometry]\nT = 1\nbogus = 3\n[nowhere]\nx = 1\n[discretization]\nn_x = sixty\n");
  ASSERT_EQ(errs.size(), 3u);
  EXPECT_NE(errs[0].find("line 3"), std::string::npos);
  EXPECT_NE(errs[1].find("line 4"), std::string::npos);
  EXPECT_NE(errs[2].find("line 7"), std::string::npos);
  EXPECT_NE(errs[2].find("sixty"), std::string::npos);
}

TEST(Config, StronglyDegenerateExponentRejected) {
  const auto errs = config_errors("[coefficient]\nalpha = 1.5\n");
  EXPECT_TRUE(any_contains(errs, "strongly degenerate coefficient (alpha >= 1) unsupported"));
}

TEST(Config, ObservationRegionMustMeetLeaderRegion) {
  const auto errs = config_errors("[regions]\nO = 0.3, 0.8\nOd = 0.05, 0.2\n");
  EXPECT_TRUE(any_contains(errs, "regions.Od must intersect regions.O"));
}

TEST(Config, CollectsEveryValidationProblem) {
  const auto errs = config_errors("[solver]\nomega = 2\n[discretization]\nn_x = 1\n[follower]\nmu1 = -1\n");
  EXPECT_EQ(errs.size(), 3u);
}

TEST(Config, EmitParseRoundTrip) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    ProblemConfig c;
    c.T = 0.5 + u(rng);
    c.ell = k % 3 == 0 ? EllFamily::constant : (k % 3 == 1 ? EllFamily::linear : EllFamily::sinusoidal);
    c.gamma = c.ell == EllFamily::constant ? 0.0 : 0.5 * u(rng);
    if (k % 2) c.drift_bound = u(rng);
    c.alpha = 0.05 + 0.9 * u(rng);
    if (k % 4 == 0) c.K = 0.99;
    c.coupling = k % 2 ? CouplingFamily::bounded_sine : CouplingFamily::linear;
    for (auto& row : c.c)
      for (double& v : row) v = u(rng) - 0.5;
    c.mu = {1.0 + 100 * u(rng), 1.0 + u(rng) / 3.0};
    c.target[1] = {u(rng), -u(rng)};
    c.s = 0.01 + u(rng);
    if (k % 3 == 2) c.lambda = 2.0 + u(rng);
    c.n_x = 10 + k;
    c.eps_pen = 1e-9 * (1 + u(rng));
    c.full_newton = k % 5 == 0;
    c.seed = 1234567890123ULL + static_cast<std::uint64_t>(k);
    c.initial = InitialShape::bump;
    c.initial_norm = u(rng);
    if (k % 2) {
      c.sweep_key = "follower.mu1";
      c.sweep_values = {1.0, 0.1, 1.0 / 3.0};
      c.sweep_command = "control";
    }
    const ProblemConfig back = parse_config(emit_config(c));
    EXPECT_EQ(back, c) << emit_config(c);
  }
}

TEST(Config, OverrideAppliesAndValidates) {
  const ProblemConfig base;
  EXPECT_DOUBLE_EQ(with_override(base, "follower.mu1", 250.0).mu[0], 250.0);
  EXPECT_EQ(with_override(base, "discretization.n_x", 40.0).n_x, 40);
  EXPECT_THROW(with_override(base, "discretization.n_x", 40.5), ConfigError);
  EXPECT_THROW(with_override(base, "coefficient.alpha", 1.2), ConfigError);
  EXPECT_THROW(with_override(base, "nodot", 1.0), ConfigError);
}

TEST(Csv, SeventeenSignificantDigitsRoundTrip) {
  EXPECT_EQ(csv_format(0.1), "0.10000000000000001");
  EXPECT_EQ(csv_format(CsvCell{42LL}), "42");
  EXPECT_EQ(csv_format(CsvCell{std::string("a,b")}), "\"a,b\"");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::strtod(csv_format(v).c_str(), nullptr), v);
  }
}

TEST(Csv, HeaderAndLfLineEndings) {
  const auto dir = fixtures::scratch_dir("csv");
  {
    CsvWriter w(dir / "a.csv", {"x", "y"});
    w.row({1.5, 2LL});
    EXPECT_THROW(w.row({1.0}), SolverError);
  }
  const std::string s = fixtures::slurp(dir / "a.csv");
  EXPECT_EQ(s, "x,y\n1.5,2\n");
  EXPECT_EQ(s.find('\r'), std::string::npos);
}

TEST(Run, ManifestWrittenOnConfigFailure) {
  const auto dir = fixtures::scratch_dir("manifest_fail");
  write_text(dir / "bad.ini", "[coefficient]\nalpha = 1.5\n");
  const RunOutcome r = run(RunRequest{"simulate", dir / "bad.ini", dir / "out", std::nullopt, 1});
  EXPECT_EQ(r.exit_code, exit_config);
  const std::string m = fixtures::slurp(dir / "out" / "manifest.ini");
  EXPECT_NE(m.find("status = config-error"), std::string::npos);
  EXPECT_NE(m.find("exit_code = 2"), std::string::npos);
  EXPECT_NE(m.find("strongly degenerate"), std::string::npos);
}

TEST(Run, ManifestEchoesConfigOnSuccess) {
  const auto dir = fixtures::scratch_dir("manifest_ok");
  const RunOutcome r = run(RunRequest{"simulate", fs::path(config_path("zero.ini")), dir, 77u, 1});
  ASSERT_EQ(r.exit_code, exit_ok);
  const std::string m = fixtures::slurp(dir / "manifest.ini");
  EXPECT_NE(m.find("status = ok"), std::string::npos);
  EXPECT_NE(m.find("seed = 77"), std::string::npos);
  EXPECT_NE(m.find("[discretization]\nn_x = 16"), std::string::npos);
  const std::string traj = fixtures::slurp(dir / "trajectory.csv");
  EXPECT_EQ(traj.substr(0, traj.find('\n')), "n,t,j,x,y1,y2");
}

TEST(Cli, ExitCodes) {
  const auto dir = fixtures::scratch_dir("cli_codes");
  EXPECT_EQ(run_cli("check-weights --config " + config_path("zero.ini") + " --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "weights.csv"));

  write_text(dir / "bad.ini", "[regions]\nOd = 0.05, 0.1\n");
  EXPECT_EQ(run_cli("simulate --config " + (dir / "bad.ini").string() + " --out " + (dir / "bad").string()), 2);
  EXPECT_TRUE(fs::exists(dir / "bad" / "manifest.ini"));

  EXPECT_EQ(run_cli("simulate --config " + (dir / "missing.ini").string() + " --out " + (dir / "missing").string()), 2);
  EXPECT_TRUE(fs::exists(dir / "missing" / "manifest.ini"));

  EXPECT_EQ(run_cli("simulate --bogus-flag"), 2);
  EXPECT_EQ(run_cli(""), 2);

  write_text(dir / "stall.ini", "[weights]\ns = 0.01\n[discretization]\nn_x = 16\nn_t = 32\n[solver]\nmax_cg = 1\n"
                                "[initial]\nshape = sine\nnorm = 0.05\n");
  EXPECT_EQ(run_cli("control --config " + (dir / "stall.ini").string() + " --out " + (dir / "stall").string()), 3);
  EXPECT_NE(fixtures::slurp(dir / "stall" / "manifest.ini").find("status = solver-error"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "stall" / "error_history.csv"));
}

TEST(Cli, SweepWritesAggregateAndMemberRuns) {
  const auto dir = fixtures::scratch_dir("cli_sweep");
  ASSERT_EQ(run_cli("sweep --config " + config_path("sweep_mu.ini") + " --threads 2 --out " + dir.string()), 0);
  const std::string agg = fixtures::slurp(dir / "sweep.csv");
  EXPECT_EQ(std::count(agg.begin(), agg.end(), '\n'), 4);
  EXPECT_EQ(agg.rfind("run,key,value,exit_code,", 0), 0u);
  for (const char* r : {"run_000", "run_001", "run_002"}) {
    EXPECT_TRUE(fs::exists(dir / r / "manifest.ini"));
    EXPECT_TRUE(fs::exists(dir / r / "convexity.csv"));
  }
  EXPECT_TRUE(fs::exists(dir / "manifest.ini"));
}

TEST(Cli, IdenticalSeedsGiveIdenticalBytes) {
  const auto dir = fixtures::scratch_dir("cli_determinism");
  for (const char* sub : {"a", "b"})
    ASSERT_EQ(run_cli("nash --config " + config_path("nash_linear.ini") + " --seed 5 --out " + (dir / sub).string()), 0);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(fixtures::slurp(e.path()), fixtures::slurp(dir / "b" / e.path().filename())) << e.path();
    ++compared;
  }
  EXPECT_GE(compared, 5u);
}

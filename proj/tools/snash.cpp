#include <CLI11.hpp>

#include <iostream>

#include "snash/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"snash: leader and follower controls for a degenerate parabolic pair"};
  app.require_subcommand(1);

  snash::RunRequest req;
  std::string config, out = ".";
  std::uint64_t seed = 0;

  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {
      {"check-weights", "verify weight identities, orderings and coefficient hypotheses"},
      {"simulate", "uncontrolled forward solve"},
      {"nash", "follower Nash equilibrium for a zero leader, with convexity sampling"},
      {"control", "leader null control of the semilinear system"},
      {"observability", "observability ratios for random terminal data"},
      {"sweep", "run a subcommand over a list of values of one config key"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", config, "INI configuration file");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "random seed (overrides solver.seed)");
    if (std::string(e.name) == "sweep")
      sub->add_option("--threads", req.threads, "concurrent sweep members")->check(CLI::PositiveNumber)->capture_default_str();
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : snash::exit_config;
  }

  for (auto* sub : subs)
    if (sub->parsed()) {
      req.command = sub->get_name();
      if (sub->count("--seed") > 0) req.seed = seed;
    }
  if (!config.empty()) req.config = config;
  req.out = out;

  const snash::RunOutcome res = snash::run(req);
  if (res.exit_code != snash::exit_ok) {
    std::cerr << req.command << ": " << res.message << "\n";
    for (const auto& d : res.details) std::cerr << "  " << d << "\n";
  }
  return res.exit_code;
}

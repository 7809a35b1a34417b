// conjlab: build conjugacies for the scenario catalog and check them.
//
//   conjlab verify --scenario example-1.1 --eps 0.1
//   conjlab regularity --scenario example-2.9 --out runs/29
//   conjlab curves --config lab.cfg --set curve_points=401
//   conjlab constants --set k=1 --set alpha=1 --set C1=0.1 --set C2=0.3
//   conjlab spectrum --scenario custom --set a=-1,-2

#include "conjlab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> scenario;
  std::optional<double> eps;
  std::optional<double> delta;
  std::optional<double> tol;
  std::optional<double> step;
  std::optional<double> window;
  std::optional<std::string> out;
  std::optional<unsigned> seed;
  bool deterministic = false;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "key = value configuration file");
  cmd.add_option("--set", f.sets, "override a configuration key (key=value), repeatable");
  cmd.add_option("--scenario", f.scenario, "example-1.1, example-2.9, example-2.11 or custom");
  cmd.add_option("--eps", f.eps, "eps of example-1.1 / example-2.9");
  cmd.add_option("--delta", f.delta, "delta of example-2.11");
  cmd.add_option("--tol", f.tol, "truncation tolerance for H and G");
  cmd.add_option("--step", f.step, "RK4 / quadrature step");
  cmd.add_option("--window", f.window, "explicit truncation window");
  cmd.add_option("--out", f.out, "output directory for reports and CSV files");
  cmd.add_option("--seed", f.seed, "seed for sampled pairs and directions");
  cmd.add_flag("--deterministic", f.deterministic, "omit timings so reports are byte-identical");
}

conjlab::ScenarioConfig resolve(const Flags& f) {
  conjlab::ScenarioConfig cfg;
  if (!f.config.empty()) conjlab::apply_config_file(cfg, f.config);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw conjlab::ConfigError("--set expects key=value, got '" + kv + "'");
    conjlab::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.scenario) cfg.scenario = *f.scenario;
  if (f.eps) cfg.eps = *f.eps;
  if (f.delta) cfg.delta = *f.delta;
  if (f.tol) cfg.tol = *f.tol;
  if (f.step) cfg.step = *f.step;
  if (f.window) cfg.window = *f.window;
  if (f.out) cfg.out = *f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (f.deterministic) cfg.deterministic = true;
  return cfg;
}

void print_summary(const conjlab::RunReport& rep) {
  for (const auto& c : rep.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << c.value
              << " threshold=" << c.threshold;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << '\n';
  }
  if (!rep.error.empty()) std::cerr << "error: " << rep.error << '\n';
  for (const auto& a : rep.artifacts) std::cout << "wrote " << a << '\n';
  std::cout << rep.command << ": " << (rep.passed() ? "pass" : "fail") << " (exit " << rep.exit_code
            << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical conjugacies between contracting linear ODEs and their Lipschitz perturbations"};
  app.require_subcommand(1);

  using Command = conjlab::RunReport (*)(const conjlab::ScenarioConfig&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"verify", "admissibility, flow bound, conjugation and round-trip residuals", conjlab::cmd_verify},
      {"regularity", "Lipschitz / Hölder / derivative probes of H and G", conjlab::cmd_regularity},
      {"curves", "CSV curves of H and G against the closed forms", conjlab::cmd_curves},
      {"constants", "Lipschitz constant of H and Hölder pair of G", conjlab::cmd_constants},
      {"spectrum", "dichotomy spectrum of the linear part", conjlab::cmd_spectrum},
  };
  std::map<std::string, Flags> flags;
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_flags(*sub, flags[name]);
    subs.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : conjlab::kExitConfigError;
  }

  for (const auto& [sub, fn] : subs) {
    if (!sub->parsed()) continue;
    conjlab::ScenarioConfig cfg;
    try {
      cfg = resolve(flags[sub->get_name()]);
    } catch (const conjlab::ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return conjlab::kExitConfigError;
    }
    try {
      const conjlab::RunReport rep = fn(cfg);
      print_summary(rep);
      return rep.exit_code;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return conjlab::kExitCheckFailure;
    }
  }
  return conjlab::kExitConfigError;
}

#include "support.hpp"

#include "conjlab/cli.hpp"

#include <catch2/catch.hpp>

#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>

using namespace conjlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("conjlab-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ScenarioConfig config(const std::string& scenario, const std::string& out) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.out = scratch(out).string();
  cfg.curve_points = 61;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json report(const ScenarioConfig& cfg, const std::string& cmd) {
  return Json::parse(slurp(fs::path(cfg.out) / ("report-" + cmd + ".json")));
}

const Check* find(const RunReport& rep, const std::string& name) {
  for (const auto& c : rep.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell.empty() ? std::nan("") : std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

int run_binary(const std::string& args) {
  const int rc = std::system((std::string(CONJLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("configuration parsing") {
  ScenarioConfig cfg;
  apply_config_text(cfg, "# lab\nscenario = custom\n a = -1, -2  # diagonal\nperturbation=cubic\n"
                         "lip = 0.05\ncurve-points = 11\nC2 = 0.2\ndeterministic = true\n");
  CHECK(cfg.scenario == "custom");
  CHECK(cfg.a == std::vector<double>{-1.0, -2.0});
  CHECK(cfg.perturbation == "cubic");
  CHECK(cfg.lip == 0.05);
  CHECK(cfg.curve_points == 11);
  CHECK(cfg.C2 == 0.2);
  CHECK(cfg.deterministic);
  CHECK_NOTHROW(validate(cfg));

  CHECK_THROWS_AS(apply_setting(cfg, "colour", "red"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "eps", "abc"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "eps 0.1\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/lab.cfg"), ConfigError);

  ScenarioConfig d;
  CHECK(d.effective_tol() == 1e-4);
  d.scenario = "example-2.11";
  CHECK(d.effective_tol() == 1e-10);
  d.scenario = "example-1.1";
  d.eps = 0.4;
  CHECK_THROWS_AS(validate(d), ConfigError);
}

TEST_CASE("verify passes on the catalog and writes a report") {
  for (const std::string s : {"example-1.1", "example-2.11"}) {
    const ScenarioConfig cfg = config(s, "verify-" + s);
    const RunReport rep = cmd_verify(cfg);
    INFO(s << ": " << rep.error);
    CHECK(rep.exit_code == kExitPass);
    for (const char* name : {"admissibility", "gronwall", "conjugation_residual", "roundtrip_residual"}) {
      INFO(name);
      REQUIRE(find(rep, name));
      CHECK(find(rep, name)->pass);
    }
    const Json j = report(cfg, "verify");
    CHECK(j["schema"] == kReportSchema);
    CHECK(j["status"] == "pass");
    CHECK(j["gronwall"]["pairs"] == 100);
    CHECK(j["residuals"]["roundtrip"]["samples"].get<std::string>().rfind("21 points", 0) == 0);
    CHECK(j.contains("timings_seconds"));
  }
}

TEST_CASE("inadmissible and invalid configurations map to exit codes") {
  ScenarioConfig bad = config("custom", "bad-lip");
  bad.lip = 2.0;
  const RunReport rep = cmd_verify(bad);
  CHECK(rep.exit_code == kExitCheckFailure);
  REQUIRE(find(rep, "admissibility"));
  CHECK(find(rep, "admissibility")->detail.find("small_aggregate") != std::string::npos);
  CHECK(report(bad, "verify")["status"] == "fail");

  ScenarioConfig eps = config("example-1.1", "bad-eps");
  eps.eps = 0.4;
  const RunReport e = cmd_verify(eps);
  CHECK(e.exit_code == kExitConfigError);
  CHECK_FALSE(e.error.empty());

  ScenarioConfig name = config("example-9.9", "bad-name");
  CHECK(cmd_curves(name).exit_code == kExitConfigError);
}

TEST_CASE("deterministic reports are byte-identical") {
  ScenarioConfig cfg = config("example-2.11", "deterministic");
  cfg.deterministic = true;
  cmd_verify(cfg);
  const std::string first = slurp(fs::path(cfg.out) / "report-verify.json");
  cmd_verify(cfg);
  CHECK(slurp(fs::path(cfg.out) / "report-verify.json") == first);
  CHECK_FALSE(Json::parse(first).contains("timings_seconds"));
}

TEST_CASE("curves echo the closed forms") {
  const ScenarioConfig cfg = config("example-2.9", "curves-29");
  const RunReport rep = cmd_curves(cfg);
  INFO(rep.error);
  CHECK(rep.exit_code == kExitPass);
  std::string header;
  const auto h = read_csv(fs::path(cfg.out) / "curves-H.csv", &header);
  CHECK(header == "x,H_oracle,H_numeric");
  REQUIRE(h.size() == 61);
  bool through = false;
  for (const auto& row : h) {
    CHECK(row[1] == Approx(oracles::oracle_H_29(0.1, row[0])).margin(1e-12));
    CHECK(std::abs(row[2] - row[1]) <= 1e-3);
    if (row[0] == 1.0) through = std::abs(row[2] - 0.9) <= 1e-3;
  }
  CHECK(through);
  const auto g = read_csv(fs::path(cfg.out) / "curves-G.csv", &header);
  CHECK(header == "y,G_oracle,G_numeric");
  CHECK(g.size() == 61);
  const auto z = read_csv(fs::path(cfg.out) / "curves-G-zoom.csv", nullptr);
  CHECK(z.size() == 41);
  CHECK(report(cfg, "curves")["artifacts"].size() == 4);
}

TEST_CASE("curves for a custom scenario leave the oracle column empty") {
  ScenarioConfig cfg = config("custom", "curves-custom");
  cfg.a = {-1.0, -2.0};
  cfg.curve_points = 11;
  CHECK(cmd_curves(cfg).exit_code == kExitPass);
  const auto h = read_csv(fs::path(cfg.out) / "curves-H.csv", nullptr);
  REQUIRE(h.size() == 11);
  CHECK(std::isnan(h[0][1]));
}

TEST_CASE("constants and spectrum") {
  ScenarioConfig cfg = config("example-1.1", "constants");
  cfg.k = 1.0;
  cfg.alpha = 1.0;
  cfg.C1 = 0.1;
  cfg.C2 = 0.3;
  const RunReport c = cmd_constants(cfg);
  CHECK(c.exit_code == kExitPass);
  const Json j = report(cfg, "constants")["constants"];
  const RegularityConstants rc = compute_regularity_constants({1.0, 1.0}, 0.1, 0.3);
  CHECK(j["q"].get<double>() == Approx(rc.q));
  CHECK(j["p1"].get<double>() == Approx(rc.p1));
  CHECK(j["theta"].is_null());

  cfg.C2 = 0.9;
  CHECK(cmd_constants(cfg).exit_code == kExitCheckFailure);

  const ScenarioConfig s29 = config("example-2.9", "spectrum");
  const RunReport sp = cmd_spectrum(s29);
  CHECK(sp.exit_code == kExitPass);
  const Json spec = report(s29, "spectrum")["spectrum"];
  CHECK(spec["linear_part"][0][0].get<double>() == Approx(-1.0));
  CHECK(spec["perturbed"][0][1].get<double>() == Approx(-0.9));

  ScenarioConfig diag = config("custom", "spectrum-diag");
  diag.a = {-1.0, -2.0};
  diag.a_cos = {0.5, 0.5};
  CHECK(cmd_spectrum(diag).exit_code == kExitPass);
  const Json d = report(diag, "spectrum")["spectrum"]["linear_part"];
  REQUIRE(d.size() == 2);
  CHECK(d[0][0].get<double>() == Approx(-2.0));
  CHECK(d[1][1].get<double>() == Approx(-1.0));
}

TEST_CASE("binary exit codes") {
  const std::string out = scratch("binary").string();
  CHECK(run_binary("verify --scenario example-2.11 --out " + out) == kExitPass);
  CHECK(run_binary("verify --scenario example-1.1 --eps 0.4 --out " + out) == kExitConfigError);
  CHECK(run_binary("verify --scenario custom --set lip=2 --out " + out) == kExitCheckFailure);
  CHECK(run_binary("verify --set colour=red --out " + out) == kExitConfigError);
  CHECK(run_binary("frobnicate") == kExitConfigError);
  CHECK(run_binary("spectrum --scenario custom --set a=-1,-2 --deterministic --out " + out) == kExitPass);
  CHECK(fs::exists(fs::path(out) / "report-spectrum.json"));
  fs::remove_all(fs::path(out).parent_path());
}

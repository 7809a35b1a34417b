#pragma once

// Commands behind the conjlab executable. Each cmd_* builds the scenario,
// runs its checks, writes a JSON report (and CSV artifacts) into cfg.out and
// returns the report; the executable only parses flags and maps exit codes.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 numerical divergence (overflow, Picard non-convergence).

#include "conjlab/conjugacy.hpp"
#include "conjlab/regularity.hpp"
#include "conjlab/scenarios.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace conjlab {

using Json = nlohmann::json;

enum ExitCode : int { kExitPass = 0, kExitCheckFailure = 1, kExitConfigError = 2, kExitDivergence = 3 };

inline constexpr int kReportSchema = 1;

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct RunReport {
  std::string command;
  Json body = Json::object();
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  std::vector<std::pair<std::string, double>> timings;
  int exit_code = kExitPass;
  std::string error;

  bool passed() const { return exit_code == kExitPass; }

  void check(std::string name, bool pass, double value, double threshold, std::string detail = {}) {
    checks.push_back({std::move(name), pass, value, threshold, std::move(detail)});
  }
};

/// Writes through a temporary file in the same directory and renames it.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json scenario_json(const ScenarioConfig& cfg) {
  Json s;
  s["name"] = cfg.scenario;
  if (cfg.scenario == "example-1.1" || cfg.scenario == "example-2.9") s["eps"] = cfg.eps;
  if (cfg.scenario == "example-2.11") s["delta"] = cfg.delta;
  s["tol"] = cfg.effective_tol();
  s["picard_tol"] = cfg.picard_tol;
  s["step"] = cfg.step;
  s["window"] = cfg.window ? Json(*cfg.window) : Json(nullptr);
  s["grid"] = {{"lo", cfg.grid_lo}, {"hi", cfg.grid_hi}, {"points", cfg.grid_points},
               {"curve_points", cfg.curve_points}};
  s["seed"] = cfg.seed;
  if (cfg.scenario == "custom") {
    s["a"] = cfg.a;
    s["a_cos"] = cfg.a_cos;
    s["omega"] = cfg.omega;
    s["perturbation"] = cfg.perturbation;
    s["lip"] = cfg.lip;
    if (cfg.perturbation == "constant") s["c"] = cfg.c.empty() ? std::vector<double>{cfg.delta} : cfg.c;
  }
  return s;
}

inline Json admissibility_json(const AdmissibilityReport& adm) {
  Json j;
  j["contraction"] = adm.a1;
  j["bounded_perturbation"] = adm.a2;
  j["lipschitz_perturbation"] = adm.a3;
  j["small_aggregate"] = adm.a4;
  j["theta"] = adm.theta;
  j["inverse_k"] = adm.inverse_k;
  j["admissible"] = adm.admissible();
  j["failures"] = adm.failures();
  if (adm.reduced_checked) {
    j["reduced"] = {{"bounded_perturbation", adm.a2_tilde},
                    {"lipschitz_perturbation", adm.a3_tilde},
                    {"small_aggregate", adm.a4_tilde}, {"mu", adm.mu}, {"lipschitz", adm.lipschitz}};
  }
  j["notes"] = adm.notes;
  return j;
}

inline Json constants_json(const ContractionCertificate& cert, double C1, double C2, double theta,
                           const RegularityConstants& rc, const ConstraintCheck& cc,
                           const AggregateOptions* range) {
  Json j;
  j["k"] = cert.k;
  j["alpha"] = cert.alpha;
  j["C1"] = C1;
  j["C2"] = C2;
  j["theta"] = theta;
  j["p1"] = rc.p1;
  j["q"] = rc.q;
  j["q_upper"] = rc.q_upper;
  j["lambda"] = rc.lambda;
  j["lambda_lower_bound"] = rc.lambda_lower_bound;
  j["p2"] = rc.p2;
  j["admissible"] = rc.admissible;
  j["constraints"] = {{"lambda", cc.lambda_ok}, {"q_range", cc.q_ok}, {"holder", cc.third_ok}};
  if (range) {
    j["aggregate_sampling"] = {{"lo", range->lo}, {"hi", range->hi},
                               {"anchor_spacing", range->anchor_spacing}, {"step", range->step},
                               {"tol", range->tol}};
  }
  return j;
}

inline Json evaluator_json(const ConjugacyEvaluator& ev) {
  return {{"window", ev.window()},
          {"window_cap", ev.window_cap()},
          {"window_capped", ev.window_capped()},
          {"tail_bound", ev.tail_bound()},
          {"g_tail_bound", ev.g_tail_bound()},
          {"step", ev.step()},
          {"tol", ev.options().tol},
          {"picard_tol", ev.picard_tol()},
          {"picard_max_iter", ev.picard_max_iter()}};
}

inline Json regularity_json(const RegularityReport& r) {
  Json j;
  j["lipschitz_estimate"] = r.lipschitz_estimate;
  j["holder_exponent"] = r.holder_fitted ? Json(r.holder_exponent) : Json(nullptr);
  j["fit_r2"] = r.holder_fitted ? Json(r.fit_r2) : Json(nullptr);
  j["right_derivative"] = r.right_derivative;
  j["left_derivative"] = r.left_derivative;
  j["derivatives_conclusive"] = r.derivatives_conclusive;
  j["non_lipschitz"] = r.non_lipschitz;
  j["non_c1"] = r.non_c1;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json probe_json(const RegularityProbe& p) {
  return {{"interval", {p.lo, p.hi}},
          {"bases", p.bases},
          {"point", p.point},
          {"scale_max", p.scales.front()},
          {"scale_min", p.scales.back()},
          {"scale_count", p.scales.size()},
          {"growth_factor", p.non_lipschitz.growth_factor},
          {"min_tail_slope", p.non_lipschitz.min_tail_slope}};
}

/// Restriction of an n-dimensional map to the first coordinate axis.
inline std::function<double(double)> axis_restriction(
    std::function<Vector(double, const Vector&)> map, int dim) {
  return [map = std::move(map), dim](double s) {
    Vector x = Vector::Zero(dim);
    x(0) = s;
    return map(0.0, x)(0);
  };
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

inline Json finish_json(const ScenarioConfig& cfg, const RunReport& rep) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = rep.command;
  j["scenario"] = scenario_json(cfg);
  for (auto it = rep.body.begin(); it != rep.body.end(); ++it) j[it.key()] = it.value();
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    Json cj{{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}};
    if (!c.detail.empty()) cj["detail"] = c.detail;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["artifacts"] = rep.artifacts;
  j["status"] = rep.passed() ? "pass" : "fail";
  j["exit_code"] = rep.exit_code;
  if (!rep.error.empty()) j["error"] = rep.error;
  j["deterministic"] = cfg.deterministic;
  if (!cfg.deterministic) {
    Json t;
    for (const auto& [name, secs] : rep.timings) t[name] = secs;
    j["timings_seconds"] = t;
  }
  return j;
}

}  // namespace detail

inline std::filesystem::path artifact_path(const ScenarioConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out) / name;
}

/// Runs `body`, maps failures to exit codes and writes the JSON report.
template <class Body>
RunReport run_command(const std::string& command, const ScenarioConfig& cfg, Body&& body) {
  RunReport rep;
  rep.command = command;
  detail::Stopwatch total;
  try {
    validate(cfg);
    body(rep);
    const bool ok = std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return c.pass; });
    if (rep.exit_code == kExitPass && !ok) rep.exit_code = kExitCheckFailure;
  } catch (const ConfigError& e) {
    rep.exit_code = kExitConfigError;
    rep.error = e.what();
  } catch (const std::invalid_argument& e) {
    rep.exit_code = kExitConfigError;
    rep.error = e.what();
  } catch (const IntegrationDiverged& e) {
    rep.exit_code = kExitDivergence;
    rep.error = e.what();
  } catch (const WindowTooLarge& e) {
    rep.exit_code = kExitDivergence;
    rep.error = e.what();
  } catch (const NoConvergence& e) {
    rep.exit_code = kExitDivergence;
    rep.error = e.what();
  } catch (const NumericError& e) {
    rep.exit_code = kExitDivergence;
    rep.error = e.what();
  } catch (const UnsupportedPerturbation& e) {
    rep.exit_code = kExitConfigError;
    rep.error = e.what();
  } catch (const NotContractive& e) {
    rep.exit_code = kExitCheckFailure;
    rep.error = e.what();
  }
  rep.timings.emplace_back("total", total.seconds());
  if (!cfg.out.empty()) {
    const auto path = artifact_path(cfg, "report-" + command + ".json");
    rep.artifacts.push_back(path.string());
    write_atomic(path, detail::finish_json(cfg, rep).dump(2) + "\n");
  }
  return rep;
}

namespace detail {

/// Builds the system and records admissibility. Returns false (with a failing
/// check naming the hypotheses) when the scenario is not admissible.
inline bool admit(const ScenarioSystem& sys, RunReport& rep) {
  const AdmissibilityReport adm = check_admissibility(sys);
  rep.body["admissibility"] = admissibility_json(adm);
  std::string failing;
  for (const auto& f : adm.failures()) failing += (failing.empty() ? "" : ",") + f;
  rep.check("admissibility", adm.admissible(), adm.theta * sys.cert.k, 1.0,
            failing.empty() ? "all hypotheses hold" : "failing: " + failing);
  return adm.admissible();
}

inline std::vector<Vector> verification_points(int dim, unsigned seed) {
  std::vector<Vector> pts;
  for (int i = 0; i <= 20; ++i) {
    Vector x = Vector::Zero(dim);
    x(0) = -2.0 + 0.2 * i;
    pts.push_back(x);
  }
  if (dim > 1) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int i = 0; i < 4; ++i) {
      Vector x(dim);
      for (int j = 0; j < dim; ++j) x(j) = unif(rng);
      pts.push_back(x);
    }
  }
  return pts;
}

}  // namespace detail

inline double conjugation_threshold(const ConjugacyEvaluator& ev) { return 10.0 * ev.options().tol; }
inline double roundtrip_threshold(const ConjugacyEvaluator& ev) {
  return std::max(20.0 * ev.options().tol, ev.picard_tol());
}

/// Admissibility, constants, flow-separation bound, conjugation identity and
/// round trip G(H(x)) = x = H(G(x)).
inline RunReport cmd_verify(const ScenarioConfig& cfg) {
  return run_command("verify", cfg, [&](RunReport& rep) {
    detail::Stopwatch sw;
    const ScenarioSystem sys = build_system(cfg);
    if (!detail::admit(sys, rep)) return;
    const int n = sys.dim();

    const RegularityConstants rc = compute_regularity_constants(sys.cert, sys.pert.C1, sys.pert.C2);
    const ConstraintCheck cc = verify_constraints(sys.cert, sys.pert.C1, sys.pert.C2, rc);
    rep.body["constants"] = detail::constants_json(sys.cert, sys.pert.C1, sys.pert.C2,
                                                   sys.pert.theta, rc, cc, &sys.pert.range);

    const ConjugacyEvaluator ev(sys, conjugacy_options(cfg));
    rep.body["evaluator"] = detail::evaluator_json(ev);
    rep.timings.emplace_back("setup", sw.seconds());

    // Flow separation on seeded pairs, forward in time.
    std::mt19937 rng(cfg.seed);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> start(-1.0, 1.0);
    std::uniform_real_distribution<double> span(0.0, 3.0);
    int gronwall_failures = 0;
    double worst_ratio = 0.0;
    constexpr int kPairs = 100;
    for (int i = 0; i < kPairs; ++i) {
      Vector x0(n), x1(n);
      for (int j = 0; j < n; ++j) {
        x0(j) = coord(rng);
        x1(j) = coord(rng);
      }
      const double t0 = start(rng);
      const double t1 = t0 + span(rng);
      const GronwallResult g = gronwall_check(sys, t0, x0, x1, t1, cfg.step);
      if (!g.pass) ++gronwall_failures;
      if (g.rhs > 0.0) worst_ratio = std::max(worst_ratio, g.lhs / g.rhs);
    }
    rep.body["gronwall"] = {{"pairs", kPairs}, {"failures", gronwall_failures},
                            {"worst_lhs_over_rhs", worst_ratio}, {"step", cfg.step}};
    rep.check("gronwall", gronwall_failures == 0, worst_ratio, 1.0,
              std::to_string(gronwall_failures) + " of " + std::to_string(kPairs) + " pairs violate");
    rep.timings.emplace_back("gronwall", sw.seconds());

    Vector xi = Vector::Zero(n);
    xi(0) = 1.0;
    const ResidualReport conj = conjugation_residual(ev, 0.0, xi, 5.0);
    const ResidualReport rt = roundtrip_residual(ev, 0.0, detail::verification_points(n, cfg.seed));
    rep.timings.emplace_back("residuals", sw.seconds());
    rep.body["residuals"] = {
        {"conjugation", {{"value", conj.conjugation_residual},
                         {"tolerance", conjugation_threshold(ev)},
                         {"tau", 0.0},
                         {"xi", detail::vector_json(xi)},
                         {"horizon", 5.0},
                         {"window", ev.window()},
                         {"samples", conj.samples}}},
        {"roundtrip", {{"value", rt.roundtrip_residual},
                       {"tolerance", roundtrip_threshold(ev)},
                       {"window", ev.window()},
                       {"samples", rt.samples}}}};
    rep.check("conjugation_residual", conj.conjugation_residual <= conjugation_threshold(ev),
              conj.conjugation_residual, conjugation_threshold(ev));
    rep.check("roundtrip_residual", rt.roundtrip_residual <= roundtrip_threshold(ev),
              rt.roundtrip_residual, roundtrip_threshold(ev));
  });
}

/// Quotients at scale 2^-14 need H and G accurate well below 1e-4, so the
/// regularity command tightens the default window tolerance.
inline double regularity_tol(const ScenarioConfig& cfg) {
  return cfg.tol ? *cfg.tol : std::min(cfg.effective_tol(), 1e-6);
}

/// Probe ladders used on numerically evaluated H and G.
inline RegularityProbe numeric_probe(const ScenarioConfig& cfg) {
  RegularityProbe p;
  p.lo = cfg.grid_lo;
  p.hi = cfg.grid_hi;
  p.bases = 61;
  p.point = 0.0;
  p.scales = dyadic_scales(3, 14);
  p.derivative_flat_tol = 1e-4;
  return p;
}

inline RegularityProbe oracle_probe(const ScenarioConfig& cfg) {
  RegularityProbe p;
  p.lo = cfg.grid_lo;
  p.hi = cfg.grid_hi;
  return p;
}

/// Regularity suite on numerical H and G (restricted to the first axis) and,
/// for catalog scenarios, on the closed forms.
inline RunReport cmd_regularity(const ScenarioConfig& cfg) {
  return run_command("regularity", cfg, [&](RunReport& rep) {
    detail::Stopwatch sw;
    const ScenarioSystem sys = build_system(cfg);
    if (!detail::admit(sys, rep)) return;
    const RegularityConstants rc = compute_regularity_constants(sys.cert, sys.pert.C1, sys.pert.C2);
    ConjugacyOptions opt = conjugacy_options(cfg);
    opt.tol = regularity_tol(cfg);
    const ConjugacyEvaluator ev(sys, opt);
    rep.body["evaluator"] = detail::evaluator_json(ev);
    rep.body["constants"] = {{"p1", rc.p1}, {"p2", rc.p2}, {"q", rc.q}};

    const int n = sys.dim();
    const auto H = detail::axis_restriction(
        [&ev](double t, const Vector& x) { return evaluate_H(ev, t, x); }, n);
    const auto G = detail::axis_restriction(
        [&ev](double t, const Vector& y) { return evaluate_G(ev, t, y); }, n);
    const RegularityProbe nprobe = numeric_probe(cfg);
    const RegularityReport hn = probe_regularity(H, nprobe);
    const RegularityReport gn = probe_regularity(G, nprobe);
    rep.timings.emplace_back("numeric", sw.seconds());

    Json numeric{{"H", detail::regularity_json(hn)}, {"G", detail::regularity_json(gn)},
                 {"probe", detail::probe_json(nprobe)}, {"window", ev.window()}};
    rep.body["numeric"] = numeric;
    rep.body["evidence_only"] = true;
    rep.check("numeric_H_lipschitz_le_p1", hn.lipschitz_estimate <= rc.p1 * (1.0 + 1e-3),
              hn.lipschitz_estimate, rc.p1);

    const auto g_csv = artifact_path(cfg, "quotients-G-numeric.csv");
    write_atomic(g_csv, quotient_trace_csv(gn.quotient_trace));
    rep.artifacts.push_back(g_csv.string());

    const auto pair = catalog_oracles(cfg);
    if (!pair) return;
    const RegularityProbe oprobe = oracle_probe(cfg);
    const RegularityReport ho = probe_regularity(pair->H, oprobe);
    const RegularityReport go = probe_regularity(pair->G, oprobe);
    rep.body["oracle"] = {{"H", detail::regularity_json(ho)}, {"G", detail::regularity_json(go)},
                          {"probe", detail::probe_json(oprobe)}};
    const auto o_csv = artifact_path(cfg, "quotients-G-oracle.csv");
    write_atomic(o_csv, quotient_trace_csv(go.quotient_trace));
    rep.artifacts.push_back(o_csv.string());

    if (cfg.scenario == "example-1.1") {
      const double expected = 1.0 - cfg.eps;
      rep.check("oracle_H_lipschitz", ho.lipschitz_estimate >= 0.99 && ho.lipschitz_estimate <= 1.000001,
                ho.lipschitz_estimate, 1.0);
      rep.check("oracle_H_non_c1", ho.non_c1, ho.left_derivative - ho.right_derivative, kNonC1Gap);
      rep.check("oracle_H_not_non_lipschitz", !ho.non_lipschitz, 0.0, 0.0);
      rep.check("oracle_G_non_lipschitz", go.non_lipschitz, go.quotient_trace.back().quotient, 0.0);
      rep.check("oracle_G_holder", go.holder_fitted && std::abs(go.holder_exponent - expected) <= 0.02,
                go.holder_exponent, expected);
      rep.check("numeric_H_non_c1", hn.non_c1, hn.left_derivative - hn.right_derivative, kNonC1Gap);
      rep.check("numeric_G_holder_below_lipschitz", gn.holder_fitted && gn.holder_exponent < 0.95,
                gn.holder_exponent, 0.95);
    } else if (cfg.scenario == "example-2.9") {
      rep.check("oracle_H_c1", !ho.non_c1, std::abs(ho.left_derivative - ho.right_derivative), kNonC1Gap);
      rep.check("numeric_H_c1", !hn.non_c1, std::abs(hn.left_derivative - hn.right_derivative), kNonC1Gap);
    } else {
      for (const auto& [label, r] : {std::pair<std::string, const RegularityReport&>{"oracle_H", ho},
                                     {"oracle_G", go}, {"numeric_H", hn}, {"numeric_G", gn}}) {
        rep.check(label + "_lipschitz_one", std::abs(r.lipschitz_estimate - 1.0) <= 1e-3,
                  r.lipschitz_estimate, 1.0);
        rep.check(label + "_exponent_one", r.holder_fitted && std::abs(r.holder_exponent - 1.0) <= 1e-2,
                  r.holder_exponent, 1.0);
      }
    }
    rep.timings.emplace_back("oracle", sw.seconds());
  });
}

namespace detail {

inline std::vector<double> curve_grid(double lo, double hi, int points) {
  std::vector<double> xs(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    xs[static_cast<std::size_t>(i)] =
        (i + 1 == points) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return xs;
}

inline std::string curve_csv(const std::string& header, const std::vector<double>& xs,
                             const std::function<double(double)>* oracle,
                             const std::vector<double>& numeric) {
  std::string out = header + "\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += format_number(xs[i]) + "," + (oracle ? format_number((*oracle)(xs[i])) : std::string()) +
           "," + format_number(numeric[i]) + "\n";
  }
  return out;
}

}  // namespace detail

/// curves-H.csv and curves-G.csv on the uniform grid, plus curves-G-zoom.csv
/// with y = +-2^-j (j = 1..20) to resolve the vertical tangent of G at 0.
inline RunReport cmd_curves(const ScenarioConfig& cfg) {
  return run_command("curves", cfg, [&](RunReport& rep) {
    detail::Stopwatch sw;
    const ScenarioSystem sys = build_system(cfg);
    if (!detail::admit(sys, rep)) return;
    const ConjugacyEvaluator ev(sys, conjugacy_options(cfg));
    rep.body["evaluator"] = detail::evaluator_json(ev);
    const int n = sys.dim();
    const auto H = detail::axis_restriction(
        [&ev](double t, const Vector& x) { return evaluate_H(ev, t, x); }, n);
    const auto G = detail::axis_restriction(
        [&ev](double t, const Vector& y) { return evaluate_G(ev, t, y); }, n);
    const auto pair = catalog_oracles(cfg);

    const auto xs = detail::curve_grid(cfg.grid_lo, cfg.grid_hi, cfg.curve_points);
    std::vector<double> zoom;
    for (int j = 20; j >= 1; --j) zoom.push_back(-std::ldexp(1.0, -j));
    zoom.push_back(0.0);
    for (int j = 1; j <= 20; ++j) zoom.push_back(std::ldexp(1.0, -j));
    std::sort(zoom.begin(), zoom.end());

    const auto hv = parallel_map(xs.size(), [&](std::size_t i) { return H(xs[i]); });
    const auto gv = parallel_map(xs.size(), [&](std::size_t i) { return G(xs[i]); });
    const auto gz = parallel_map(zoom.size(), [&](std::size_t i) { return G(zoom[i]); });
    rep.timings.emplace_back("evaluation", sw.seconds());

    const std::function<double(double)>* ho = pair ? &pair->H : nullptr;
    const std::function<double(double)>* go = pair ? &pair->G : nullptr;
    const std::vector<std::pair<std::string, std::string>> files{
        {"curves-H.csv", detail::curve_csv("x,H_oracle,H_numeric", xs, ho, hv)},
        {"curves-G.csv", detail::curve_csv("y,G_oracle,G_numeric", xs, go, gv)},
        {"curves-G-zoom.csv", detail::curve_csv("y,G_oracle,G_numeric", zoom, go, gz)}};
    for (const auto& [name, text] : files) {
      const auto path = artifact_path(cfg, name);
      write_atomic(path, text);
      rep.artifacts.push_back(path.string());
    }

    double h_err = 0.0;
    double g_err = 0.0;
    if (pair) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        h_err = std::max(h_err, std::abs(pair->H(xs[i]) - hv[i]));
        g_err = std::max(g_err, std::abs(pair->G(xs[i]) - gv[i]));
      }
      rep.body["oracle_deviation"] = {{"H_max_abs", h_err}, {"G_max_abs", g_err},
                                      {"window", ev.window()}, {"tol", ev.options().tol}};
    }
    rep.body["points"] = xs.size();
    rep.body["zoom_points"] = zoom.size();
    double h_jump = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) h_jump = std::max(h_jump, std::abs(hv[i] - hv[i - 1]));
    const double spacing = (cfg.grid_hi - cfg.grid_lo) / static_cast<double>(cfg.curve_points - 1);
    // Catalog maps have |H'| <= 3^{1/9} on the default grid; custom ones only the p1 bound.
    const double slope =
        pair ? 1.0 : compute_regularity_constants(sys.cert, sys.pert.C1, sys.pert.C2).p1;
    const double jump_limit = 2.0 * slope * spacing;
    rep.check("H_curve_continuous", h_jump < jump_limit, h_jump, jump_limit);
  });
}

/// p1, q, lambda, p2 for the scenario's (k, alpha, C1, C2), any of which can be
/// overridden in the configuration.
inline RunReport cmd_constants(const ScenarioConfig& cfg) {
  return run_command("constants", cfg, [&](RunReport& rep) {
    ContractionCertificate cert;
    double C1 = 0.0;
    double C2 = 0.0;
    double theta = 0.0;
    const AggregateOptions* range = nullptr;
    std::optional<ScenarioSystem> sys;
    if (!(cfg.k && cfg.alpha && cfg.C1 && cfg.C2)) {
      sys = build_system(cfg);
      cert = sys->cert;
      C1 = sys->pert.C1;
      C2 = sys->pert.C2;
      theta = sys->pert.theta;
      range = &sys->pert.range;
    }
    if (cfg.k) cert.k = *cfg.k;
    if (cfg.alpha) cert.alpha = *cfg.alpha;
    if (cfg.C1) C1 = *cfg.C1;
    if (cfg.C2) C2 = *cfg.C2;
    if (cfg.k || cfg.alpha || cfg.C1 || cfg.C2) {
      range = nullptr;
      if (!sys) theta = std::numeric_limits<double>::quiet_NaN();
    }
    const RegularityConstants rc = compute_regularity_constants(cert, C1, C2);
    const ConstraintCheck cc = verify_constraints(cert, C1, C2, rc);
    Json j = detail::constants_json(cert, C1, C2, theta, rc, cc, range);
    if (std::isnan(theta)) j["theta"] = nullptr;
    rep.body["constants"] = j;
    rep.check("q_admissible", rc.admissible, rc.q, rc.q_upper);
    rep.check("constraints_verified", rc.admissible && cc.all(),
              holder_constraint_lhs(cert.k, cert.alpha, C2, rc.q), 1.0 / 3.0);
  });
}

namespace detail {

/// Dichotomy spectrum of the linear part of the perturbed system when it is
/// available in closed form: constant A (+ B), or diagonal-periodic A, whose
/// diagonal entries a_i + b_i cos(omega t) have spectrum {a_i}.
inline SpectrumResult scenario_spectrum(const ScenarioConfig& cfg, const ScenarioSystem& sys,
                                        bool include_linear) {
  const int n = sys.dim();
  const Matrix B = (include_linear && sys.pert.is_linear() && sys.pert.linear->constant)
                       ? *sys.pert.linear->constant
                       : Matrix(Matrix::Zero(n, n));
  if (include_linear && sys.pert.is_linear() && !sys.pert.linear->constant) {
    throw UnsupportedPerturbation("spectrum: time-dependent linear perturbation");
  }
  if (sys.A.constant) return dichotomy_spectrum_constant(*sys.A.constant + B);
  Matrix mean = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) mean(i, i) = cfg.a[static_cast<std::size_t>(i)];
  return dichotomy_spectrum_constant(mean + B);
}

inline Json intervals_json(const SpectrumResult& s) {
  Json out = Json::array();
  for (const auto& [a, b] : s.intervals) out.push_back({a, b});
  return out;
}

}  // namespace detail

/// Spectrum of the linear part and, for linear perturbations, of A + B.
inline RunReport cmd_spectrum(const ScenarioConfig& cfg) {
  return run_command("spectrum", cfg, [&](RunReport& rep) {
    const ScenarioSystem sys = build_system(cfg);
    const SpectrumResult base = detail::scenario_spectrum(cfg, sys, false);
    rep.body["spectrum"] = {{"linear_part", detail::intervals_json(base)},
                            {"contraction", base.contraction}};
    if (sys.pert.is_linear()) {
      const SpectrumResult pert = detail::scenario_spectrum(cfg, sys, true);
      rep.body["spectrum"]["perturbed"] = detail::intervals_json(pert);
      rep.body["spectrum"]["perturbed_contraction"] = pert.contraction;
      rep.check("perturbed_spectrum_negative", pert.contraction, pert.intervals.back().second, 0.0);
    }
    rep.check("spectrum_negative", base.contraction, base.intervals.back().second, 0.0);
  });
}

}  // namespace conjlab

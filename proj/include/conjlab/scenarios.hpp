#pragma once

// Scenario catalog and flat key=value configuration.
//
//   example-1.1   x' = -x + f_eps(x), f_eps the saturated cubic, 0 < eps < 1/3
//   example-2.9   x' = -x + eps x, 0 < eps < 1
//   example-2.11  x' = -x + delta
//   custom        x' = diag(a_i + a_cos_i cos(omega t)) x + f(x) with f one of
//                 saturated, cubic, constant, linear, none

#include "conjlab/conjugacy.hpp"
#include "conjlab/oracles.hpp"
#include "conjlab/system.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace conjlab {

class ConfigError : public Error {
  using Error::Error;
};

struct ScenarioConfig {
  std::string scenario = "example-1.1";
  double eps = 0.1;
  double delta = 0.5;
  /// Window tolerance; defaults per scenario when unset.
  std::optional<double> tol;
  double picard_tol = 1e-8;
  double step = 1e-3;
  std::optional<double> window;
  double grid_lo = -3.0;
  double grid_hi = 3.0;
  int grid_points = 41;
  int curve_points = 2001;
  unsigned seed = 42;
  bool deterministic = false;
  std::string out = "conjlab-out";

  // custom scenarios
  std::vector<double> a{-1.0};
  std::vector<double> a_cos;
  double omega = 1.0;
  std::string perturbation = "saturated";
  double lip = 0.1;
  std::vector<double> c;

  // constants command overrides
  std::optional<double> k;
  std::optional<double> alpha;
  std::optional<double> C1;
  std::optional<double> C2;

  double effective_tol() const {
    if (tol) return *tol;
    return scenario == "example-2.11" ? 1e-10 : 1e-4;
  }
  bool is_catalog() const { return scenario != "custom"; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError("invalid number for '" + key + "': '" + text + "'");
  }
  return out;
}

inline long parse_integer(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid integer for '" + key + "': '" + text + "'");
  }
  return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  std::string v = trim(text);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + text + "'");
}

}  // namespace detail

inline void apply_setting(ScenarioConfig& cfg, const std::string& raw_key, const std::string& value) {
  using namespace detail;
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "scenario") {
    cfg.scenario = trim(value);
  } else if (key == "eps") {
    cfg.eps = parse_double(key, value);
  } else if (key == "delta") {
    cfg.delta = parse_double(key, value);
  } else if (key == "tol") {
    cfg.tol = parse_double(key, value);
  } else if (key == "picard_tol") {
    cfg.picard_tol = parse_double(key, value);
  } else if (key == "step") {
    cfg.step = parse_double(key, value);
  } else if (key == "window") {
    cfg.window = parse_double(key, value);
  } else if (key == "grid_lo") {
    cfg.grid_lo = parse_double(key, value);
  } else if (key == "grid_hi") {
    cfg.grid_hi = parse_double(key, value);
  } else if (key == "grid_points") {
    cfg.grid_points = static_cast<int>(parse_integer(key, value));
  } else if (key == "curve_points") {
    cfg.curve_points = static_cast<int>(parse_integer(key, value));
  } else if (key == "seed") {
    cfg.seed = static_cast<unsigned>(parse_integer(key, value));
  } else if (key == "deterministic") {
    cfg.deterministic = parse_bool(key, value);
  } else if (key == "out") {
    cfg.out = trim(value);
  } else if (key == "a") {
    cfg.a = parse_list(key, value);
  } else if (key == "a_cos") {
    cfg.a_cos = parse_list(key, value);
  } else if (key == "omega") {
    cfg.omega = parse_double(key, value);
  } else if (key == "perturbation") {
    cfg.perturbation = trim(value);
  } else if (key == "lip") {
    cfg.lip = parse_double(key, value);
  } else if (key == "c") {
    cfg.c = parse_list(key, value);
  } else if (key == "k") {
    cfg.k = parse_double(key, value);
  } else if (key == "alpha") {
    cfg.alpha = parse_double(key, value);
  } else if (key == "C1" || key == "c1") {
    cfg.C1 = parse_double(key, value);
  } else if (key == "C2" || key == "c2") {
    cfg.C2 = parse_double(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + raw_key + "'");
  }
}

/// Parses "key = value" lines; '#' starts a comment.
inline void apply_config_text(ScenarioConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

inline void apply_config_file(ScenarioConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

inline void validate(const ScenarioConfig& cfg) {
  static const std::vector<std::string> names{"example-1.1", "example-2.9", "example-2.11", "custom"};
  if (std::find(names.begin(), names.end(), cfg.scenario) == names.end()) {
    throw ConfigError("unknown scenario '" + cfg.scenario +
                      "' (expected example-1.1, example-2.9, example-2.11 or custom)");
  }
  if (cfg.scenario == "example-1.1" && !(cfg.eps > 0.0 && cfg.eps < 1.0 / 3.0)) {
    throw ConfigError("example-1.1 requires 0 < eps < 1/3");
  }
  if (cfg.scenario == "example-2.9" && !(cfg.eps > 0.0 && cfg.eps < 1.0)) {
    throw ConfigError("example-2.9 requires 0 < eps < 1");
  }
  if (!(cfg.effective_tol() > 0.0)) throw ConfigError("tol must be positive");
  if (!(cfg.picard_tol > 0.0)) throw ConfigError("picard_tol must be positive");
  if (!(cfg.step > 0.0 && cfg.step <= 0.1)) throw ConfigError("step must be in (0, 0.1]");
  if (cfg.window && !(*cfg.window > 0.0)) throw ConfigError("window must be positive");
  if (!(cfg.grid_hi > cfg.grid_lo)) throw ConfigError("grid_hi must exceed grid_lo");
  if (cfg.grid_points < 2 || cfg.curve_points < 2) throw ConfigError("grids need at least 2 points");
  if (cfg.scenario == "custom") {
    if (cfg.a.empty() || cfg.a.size() > static_cast<std::size_t>(kMaxDim)) {
      throw ConfigError("custom: 'a' needs 1 to 8 entries");
    }
    if (!cfg.a_cos.empty() && cfg.a_cos.size() != cfg.a.size()) {
      throw ConfigError("custom: 'a_cos' must match 'a' in length");
    }
    if (!(cfg.omega > 0.0)) throw ConfigError("custom: omega must be positive");
    static const std::vector<std::string> kinds{"saturated", "cubic", "constant", "linear", "none"};
    if (std::find(kinds.begin(), kinds.end(), cfg.perturbation) == kinds.end()) {
      throw ConfigError("custom: unknown perturbation '" + cfg.perturbation + "'");
    }
    if (!(cfg.lip >= 0.0)) throw ConfigError("custom: lip must be nonnegative");
    if (!cfg.c.empty() && cfg.c.size() != cfg.a.size()) {
      throw ConfigError("custom: 'c' must match 'a' in length");
    }
  }
}

inline ScenarioSystem example11_system(double eps) {
  const oracles::Example11Params p(eps);
  ScenarioSystem sys;
  sys.label = "example-1.1";
  sys.A = constant_field(scalar_matrix(-1.0));
  sys.cert = {1.0, 1.0};
  sys.pert = make_uniform_perturbation(
      1, [eps](double, const Vector& x) { return scalar_vector(oracles::example11_f(eps, x(0))); },
      eps, 3.0 * eps, 1.0);
  return sys;
}

inline ScenarioSystem example29_system(double eps) {
  oracles::check_eps_29(eps);
  ScenarioSystem sys;
  sys.label = "example-2.9";
  sys.A = constant_field(scalar_matrix(-1.0));
  sys.cert = {1.0, 1.0};
  sys.pert = linear_perturbation(constant_field(scalar_matrix(eps)), eps, 1.0, 1.0);
  return sys;
}

inline ScenarioSystem example211_system(double delta) {
  ScenarioSystem sys;
  sys.label = "example-2.11";
  sys.A = constant_field(scalar_matrix(-1.0));
  sys.cert = {1.0, 1.0};
  sys.pert = constant_perturbation(scalar_vector(delta), 1.0);
  return sys;
}

/// Closed-form certificate for diag(a_i + b_i cos(omega t)):
/// U_ii(t, s) = exp(a_i (t - s) + (b_i / omega)(sin omega t - sin omega s)).
inline ContractionCertificate diagonal_periodic_certificate(const std::vector<double>& a,
                                                            const std::vector<double>& b,
                                                            double omega) {
  double top = -std::numeric_limits<double>::infinity();
  double swing = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    top = std::max(top, a[i]);
    if (i < b.size()) swing = std::max(swing, 2.0 * std::abs(b[i]) / omega);
  }
  return {std::exp(swing), -top};
}

inline ScenarioSystem custom_system(const ScenarioConfig& cfg) {
  const int n = static_cast<int>(cfg.a.size());
  const std::vector<double> b = cfg.a_cos.empty() ? std::vector<double>(cfg.a.size(), 0.0) : cfg.a_cos;
  ScenarioSystem sys;
  sys.label = "custom";
  sys.A = diagonal_periodic(cfg.a, b, cfg.omega);
  sys.cert = diagonal_periodic_certificate(cfg.a, b, cfg.omega);
  // Aggregates need a positive rate; a non-contracting A fails the contraction check anyway.
  const double rate = sys.cert.alpha > 0.0 ? sys.cert.alpha : 1.0;
  const double L = cfg.lip;
  const double root_n = std::sqrt(static_cast<double>(n));
  if (cfg.perturbation == "saturated") {
    sys.pert = make_uniform_perturbation(
        n,
        [L](double, const Vector& x) -> Vector { return L * x.cwiseMax(-1.0).cwiseMin(1.0); },
        L * root_n, L, rate);
  } else if (cfg.perturbation == "cubic") {
    sys.pert = make_uniform_perturbation(
        n,
        [L](double, const Vector& x) -> Vector {
          return x.unaryExpr([L](double v) { return oracles::example11_f(L, v); });
        },
        L * root_n, 3.0 * L, rate);
  } else if (cfg.perturbation == "constant") {
    Vector c(n);
    for (int i = 0; i < n; ++i) c(i) = cfg.c.empty() ? cfg.delta : cfg.c[static_cast<std::size_t>(i)];
    sys.pert = constant_perturbation(c, rate);
  } else if (cfg.perturbation == "linear") {
    sys.pert = linear_perturbation(constant_field(L * Matrix::Identity(n, n)), L, rate, 1.0);
  } else {
    sys.pert = zero_perturbation(n, rate);
  }
  return sys;
}

inline ScenarioSystem build_system(const ScenarioConfig& cfg) {
  validate(cfg);
  if (cfg.scenario == "example-1.1") return example11_system(cfg.eps);
  if (cfg.scenario == "example-2.9") return example29_system(cfg.eps);
  if (cfg.scenario == "example-2.11") return example211_system(cfg.delta);
  return custom_system(cfg);
}

inline ConjugacyOptions conjugacy_options(const ScenarioConfig& cfg) {
  ConjugacyOptions opt;
  opt.tol = cfg.effective_tol();
  opt.step = cfg.step;
  opt.window = cfg.window;
  opt.picard_tol = cfg.picard_tol;
  return opt;
}

/// Closed-form H and G of a catalog scenario (scalar).
struct OraclePair {
  std::function<double(double)> H;
  std::function<double(double)> G;
};

inline std::optional<OraclePair> catalog_oracles(const ScenarioConfig& cfg) {
  if (cfg.scenario == "example-1.1") {
    const oracles::Example11Params p(cfg.eps);
    auto H = oracles::example11_H(p);
    auto G = oracles::example11_G(p);
    return OraclePair{[H](double x) { return H(x); }, [G](double y) { return G(y); }};
  }
  if (cfg.scenario == "example-2.9") {
    const double e = cfg.eps;
    return OraclePair{[e](double x) { return oracles::oracle_H_29(e, x); },
                      [e](double y) { return oracles::oracle_G_29(e, y); }};
  }
  if (cfg.scenario == "example-2.11") {
    const double d = cfg.delta;
    return OraclePair{[d](double x) { return oracles::oracle_affine_211(d, x).H; },
                      [d](double y) { return y + d; }};
  }
  return std::nullopt;
}

}  // namespace conjlab

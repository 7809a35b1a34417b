#pragma once

// Empirical regularity probes for maps R^n -> R^n: sup of difference
// quotients, log-log Hölder fits, one-sided derivatives and a divergence test
// for difference quotients. Nothing here proves anything about a map; the
// numbers are evidence taken on finite scale ladders.

#include "conjlab/parallel.hpp"
#include "conjlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace conjlab {

struct ModulusSample {
  /// (separation, value gap), sorted by separation.
  std::vector<std::pair<double, double>> pairs;
  Vector base_point;
  std::pair<double, double> scale_range{0.0, 0.0};
};

/// 2^-first, ..., 2^-last.
inline std::vector<double> dyadic_scales(int first = 5, int last = 20) {
  std::vector<double> out;
  for (int j = first; j <= last; ++j) out.push_back(std::ldexp(1.0, -j));
  return out;
}

/// Coordinate axes followed by `random_count` unit vectors drawn with `seed`.
inline std::vector<Vector> default_directions(int dim, int random_count = 4, unsigned seed = 42) {
  std::vector<Vector> out;
  for (int i = 0; i < dim; ++i) {
    Vector e = Vector::Zero(dim);
    e(i) = 1.0;
    out.push_back(e);
  }
  if (dim == 1) return out;
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < random_count; ++k) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
    out.push_back(v / v.norm());
  }
  return out;
}

inline VectorMap lift_scalar(std::function<double(double)> f) {
  return [f = std::move(f)](const Vector& x) { return scalar_vector(f(x(0))); };
}

inline void sort_pairs(ModulusSample& s) {
  std::sort(s.pairs.begin(), s.pairs.end());
  if (!s.pairs.empty()) s.scale_range = {s.pairs.front().first, s.pairs.back().first};
}

/// (s, ||map(base + s d) - map(base)||) for every scale s and direction d.
inline ModulusSample sample_modulus(const VectorMap& map, const Vector& base,
                                    const std::vector<double>& scales,
                                    const std::vector<Vector>& directions) {
  for (double s : scales) {
    if (!(s > 0.0)) throw std::invalid_argument("sample_modulus: scales must be positive");
  }
  const Vector f0 = map(base);
  const std::size_t nd = directions.size();
  const auto gaps = parallel_map(scales.size() * nd, [&](std::size_t i) {
    const double s = scales[i / nd];
    return (map(Vector(base + s * directions[i % nd])) - f0).norm();
  });
  ModulusSample out;
  out.base_point = base;
  for (std::size_t i = 0; i < gaps.size(); ++i) out.pairs.emplace_back(scales[i / nd], gaps[i]);
  sort_pairs(out);
  return out;
}

inline ModulusSample sample_modulus(const std::function<double(double)>& map, double base,
                                    const std::vector<double>& scales, double direction = 1.0) {
  return sample_modulus(lift_scalar(map), scalar_vector(base), scales, {scalar_vector(direction)});
}

/// Pairs (x, x + s) with both ends in [lo, hi], for `bases` evenly spaced x.
/// Both interval ends are always used as base points (x = hi pairs with hi - s).
inline ModulusSample sample_interval(const std::function<double(double)>& map, double lo, double hi,
                                     int bases, const std::vector<double>& scales) {
  if (!(hi > lo) || bases < 2) throw std::invalid_argument("sample_interval: bad interval");
  const auto rows = parallel_map(static_cast<std::size_t>(bases), [&](std::size_t i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bases - 1);
    const double fx = map(x);
    std::vector<std::pair<double, double>> row;
    for (double s : scales) {
      if (!(s > 0.0)) throw std::invalid_argument("sample_interval: scales must be positive");
      const double y = (x + s <= hi) ? x + s : x - s;
      if (y < lo) continue;
      row.emplace_back(std::abs(y - x), std::abs(map(y) - fx));
    }
    return row;
  });
  ModulusSample out;
  out.base_point = scalar_vector(0.5 * (lo + hi));
  for (const auto& row : rows) out.pairs.insert(out.pairs.end(), row.begin(), row.end());
  sort_pairs(out);
  return out;
}

inline double estimate_lipschitz(const ModulusSample& sample) {
  if (sample.pairs.empty()) throw EmptyInput("estimate_lipschitz: empty sample");
  double best = 0.0;
  for (const auto& [sep, gap] : sample.pairs) best = std::max(best, gap / sep);
  return best;
}

struct HolderFit {
  double exponent = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of log(gap) against log(separation). The two largest
/// scales are left out when at least five remain.
inline HolderFit fit_holder_exponent(const ModulusSample& sample) {
  std::vector<double> scales;
  for (const auto& p : sample.pairs) {
    if (scales.empty() || scales.back() != p.first) scales.push_back(p.first);
  }
  if (scales.size() < 5) throw DegenerateFit("fit_holder_exponent: need at least 5 scales");
  if (scales.back() / scales.front() < 1e3 * (1.0 - 1e-12)) {
    throw DegenerateFit("fit_holder_exponent: scales must span at least 3 decades");
  }
  const double cutoff = scales.size() >= 7 ? scales[scales.size() - 3] : scales.back();
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [sep, gap] : sample.pairs) {
    if (sep > cutoff) continue;
    if (!(gap > 0.0) || !std::isfinite(gap)) {
      throw DegenerateFit("fit_holder_exponent: zero or non-finite value gap");
    }
    lx.push_back(std::log(sep));
    ly.push_back(std::log(gap));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  HolderFit fit;
  fit.points = lx.size();
  fit.exponent = sxy / sxx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

struct OneSidedDerivatives {
  double right = 0.0;
  double left = 0.0;
  bool right_converged = true;
  bool left_converged = true;

  bool conclusive() const { return right_converged && left_converged; }
};

namespace detail {

/// Aitken delta-squared limit of d1, d2, d3 taken at geometrically shrinking
/// scales. Returns {limit, converged}.
inline std::pair<double, bool> aitken_limit(double d1, double d2, double d3, double flat_tol) {
  const double a = d2 - d1;
  const double b = d3 - d2;
  const double floor = flat_tol * std::max(1.0, std::abs(d3));
  if (std::abs(a) <= floor && std::abs(b) <= floor) return {d3, true};
  if (a == 0.0) return {d3, false};
  const double rho = b / a;
  if (!(rho > 0.0 && rho < 1.0)) return {d3, false};
  return {d3 + b * rho / (1.0 - rho), true};
}

}  // namespace detail

/// Directional one-sided derivatives at `point`, extrapolated from the three
/// smallest scales (which should form a geometric ladder). Quotients that
/// change by less than flat_tol (relative) are taken as converged as they are.
inline OneSidedDerivatives one_sided_derivatives(const VectorMap& map, const Vector& point,
                                                 const Vector& direction,
                                                 const std::vector<double>& scales,
                                                 double flat_tol = 1e-8) {
  if (scales.size() < 3) throw std::invalid_argument("one_sided_derivatives: need 3 scales");
  std::vector<double> s = scales;
  std::sort(s.begin(), s.end(), std::greater<>());
  s.erase(s.begin(), s.end() - 3);
  const Vector f0 = map(point);
  const Vector d = direction / direction.norm();
  double right[3];
  double left[3];
  for (int i = 0; i < 3; ++i) {
    right[i] = d.dot(map(Vector(point + s[i] * d)) - f0) / s[i];
    left[i] = d.dot(f0 - map(Vector(point - s[i] * d))) / s[i];
  }
  OneSidedDerivatives out;
  std::tie(out.right, out.right_converged) = detail::aitken_limit(right[0], right[1], right[2], flat_tol);
  std::tie(out.left, out.left_converged) = detail::aitken_limit(left[0], left[1], left[2], flat_tol);
  return out;
}

inline OneSidedDerivatives one_sided_derivatives(const std::function<double(double)>& map,
                                                 double point, const std::vector<double>& scales,
                                                 double flat_tol = 1e-8) {
  return one_sided_derivatives(lift_scalar(map), scalar_vector(point), scalar_vector(1.0), scales,
                               flat_tol);
}

/// Gap between the one-sided derivatives above which a map counts as not C^1.
inline constexpr double kNonC1Gap = 0.5;

struct QuotientRow {
  double scale = 0.0;
  double gap = 0.0;
  double quotient = 0.0;
};

struct NonLipschitzOptions {
  /// Largest quotient must exceed this multiple of the quotient at the largest scale.
  double growth_factor = 2.0;
  /// Relative drop tolerated between consecutive tail quotients.
  double noise = 0.05;
  /// Minimal slope of log(quotient) against -log(scale) over the tail.
  double min_tail_slope = 0.05;
  std::size_t tail = 4;
};

struct NonLipschitzResult {
  bool flagged = false;
  bool tail_monotone = false;
  double growth = 0.0;
  double tail_slope = 0.0;
  /// Ordered from the largest to the smallest scale.
  std::vector<QuotientRow> trace;
};

inline NonLipschitzResult detect_non_lipschitz(const VectorMap& map, const Vector& point,
                                               const Vector& direction,
                                               const std::vector<double>& scales,
                                               const NonLipschitzOptions& opt = {}) {
  if (scales.size() < 8) throw std::invalid_argument("detect_non_lipschitz: need at least 8 scales");
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (!(scales[i] < scales[i - 1])) {
      throw std::invalid_argument("detect_non_lipschitz: scales must be strictly decreasing");
    }
  }
  const Vector f0 = map(point);
  const Vector d = direction / direction.norm();
  NonLipschitzResult res;
  res.trace = parallel_map(scales.size(), [&](std::size_t i) {
    const double gap = (map(Vector(point + scales[i] * d)) - f0).norm();
    return QuotientRow{scales[i], gap, gap / scales[i]};
  });
  const std::size_t n = res.trace.size();
  const std::size_t first = n - std::min(opt.tail, n);
  res.tail_monotone = true;
  for (std::size_t i = first + 1; i < n; ++i) {
    if (res.trace[i].quotient < (1.0 - opt.noise) * res.trace[i - 1].quotient) {
      res.tail_monotone = false;
    }
  }
  double top = 0.0;
  for (const auto& row : res.trace) top = std::max(top, row.quotient);
  const double q0 = res.trace.front().quotient;
  res.growth = q0 > 0.0 ? top / q0 : (top > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  const QuotientRow& a = res.trace[first];
  const QuotientRow& b = res.trace.back();
  if (a.quotient > 0.0 && b.quotient > 0.0) {
    res.tail_slope = std::log(b.quotient / a.quotient) / std::log(a.scale / b.scale);
  }
  res.flagged = res.tail_monotone && res.growth >= opt.growth_factor &&
                res.tail_slope >= opt.min_tail_slope;
  return res;
}

inline NonLipschitzResult detect_non_lipschitz(const std::function<double(double)>& map,
                                               double point, const std::vector<double>& scales,
                                               double direction = 1.0,
                                               const NonLipschitzOptions& opt = {}) {
  return detect_non_lipschitz(lift_scalar(map), scalar_vector(point), scalar_vector(direction),
                              scales, opt);
}

inline std::string quotient_trace_csv(const std::vector<QuotientRow>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "scale,gap,quotient\n";
  for (const auto& row : trace) out << row.scale << ',' << row.gap << ',' << row.quotient << '\n';
  return out.str();
}

struct RegularityReport {
  double lipschitz_estimate = 0.0;
  double holder_exponent = 0.0;
  double fit_r2 = 0.0;
  bool holder_fitted = false;
  double right_derivative = 0.0;
  double left_derivative = 0.0;
  bool derivatives_conclusive = false;
  bool non_lipschitz = false;
  bool non_c1 = false;
  std::vector<QuotientRow> quotient_trace;
  std::string note;
};

struct RegularityProbe {
  double lo = -3.0;
  double hi = 3.0;
  int bases = 121;
  /// Base point of the local probes (Hölder fit, derivatives, divergence test).
  double point = 0.0;
  std::vector<double> scales = dyadic_scales();
  /// Relative change below which one-sided quotients count as converged.
  double derivative_flat_tol = 1e-8;
  NonLipschitzOptions non_lipschitz;
};

/// Full probe of a scalar map: Lipschitz estimate over [lo, hi], and local
/// probes at `point` on both sides. The Hölder exponent is the smaller of the
/// two one-sided fits; non_lipschitz is set if either side diverges.
inline RegularityReport probe_regularity(const std::function<double(double)>& map,
                                         const RegularityProbe& probe = {}) {
  RegularityReport rep;
  rep.lipschitz_estimate = estimate_lipschitz(sample_interval(map, probe.lo, probe.hi, probe.bases,
                                                              probe.scales));
  std::vector<std::string> notes;
  double exponent = std::numeric_limits<double>::infinity();
  double r2 = 1.0;
  for (double dir : {1.0, -1.0}) {
    try {
      const HolderFit fit = fit_holder_exponent(sample_modulus(map, probe.point, probe.scales, dir));
      if (fit.exponent < exponent) {
        exponent = fit.exponent;
        r2 = fit.r2;
      }
    } catch (const DegenerateFit& e) {
      notes.emplace_back(e.what());
    }
  }
  if (std::isfinite(exponent)) {
    rep.holder_fitted = true;
    rep.holder_exponent = exponent;
    rep.fit_r2 = r2;
  }
  const OneSidedDerivatives d = one_sided_derivatives(map, probe.point, probe.scales, probe.derivative_flat_tol);
  rep.right_derivative = d.right;
  rep.left_derivative = d.left;
  rep.derivatives_conclusive = d.conclusive();
  rep.non_c1 = d.conclusive() && std::abs(d.right - d.left) > kNonC1Gap;
  if (!d.conclusive()) notes.emplace_back("one-sided derivative extrapolation inconclusive");
  for (double dir : {1.0, -1.0}) {
    NonLipschitzResult r = detect_non_lipschitz(map, probe.point, probe.scales, dir,
                                                probe.non_lipschitz);
    if (r.flagged || rep.quotient_trace.empty()) {
      if (r.flagged) rep.non_lipschitz = true;
      if (rep.quotient_trace.empty() || r.flagged) rep.quotient_trace = std::move(r.trace);
    }
    if (rep.non_lipschitz) break;
  }
  std::ostringstream joined;
  for (std::size_t i = 0; i < notes.size(); ++i) joined << (i ? "; " : "") << notes[i];
  rep.note = joined.str();
  return rep;
}

}  // namespace conjlab

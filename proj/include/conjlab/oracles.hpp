#pragma once

// Closed-form conjugacies and solutions for the scalar model x' = -x + f(x)
// with the three reference perturbations: the saturated cubic (example-1.1
// scenario), the linear one f = eps x, and a constant f = delta.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace conjlab::oracles {

struct Example11Params {
  double eps = 0.1;

  explicit Example11Params(double e) : eps(e) {
    if (!(e > 0.0 && e < 1.0 / 3.0)) {
      throw std::invalid_argument("example-1.1 requires 0 < eps < 1/3");
    }
  }
};

/// Guard interval with independently open or closed ends.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }
  bool interior(double x) const { return x > lo && x < hi; }
};

/// Scalar map given branch by branch.
class PiecewiseMap {
 public:
  struct Branch {
    Interval guard;
    std::function<double(double)> value;
    std::function<double(double)> derivative;
  };

  explicit PiecewiseMap(std::vector<Branch> branches) : branches_(std::move(branches)) {}

  double operator()(double x) const { return branch_for(x).value(x); }

  /// Defined only strictly inside a branch; breakpoints and point branches
  /// have no derivative.
  std::optional<double> derivative(double x) const {
    const Branch& b = branch_for(x);
    if (!b.guard.interior(x) || !b.derivative) return std::nullopt;
    return b.derivative(x);
  }

  const std::vector<Branch>& branches() const { return branches_; }

  /// Finite endpoints shared by consecutive branches.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (const auto& b : branches_) {
      if (std::isfinite(b.guard.hi) && (out.empty() || out.back() != b.guard.hi)) {
        out.push_back(b.guard.hi);
      }
    }
    return out;
  }

 private:
  const Branch& branch_for(double x) const {
    for (const auto& b : branches_) {
      if (b.guard.contains(x)) return b;
    }
    throw std::domain_error("PiecewiseMap: no branch covers the argument");
  }

  std::vector<Branch> branches_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Perturbation of the example-1.1 scenario.
inline double example11_f(double eps, double x) {
  if (x >= 1.0) return eps;
  if (x >= 0.0) return eps * x;
  if (x > -1.0) return eps * x * x * x;
  return -eps;
}

inline PiecewiseMap example11_H(const Example11Params& p) {
  const double e = p.eps;
  const double c = std::pow(1.0 - e, 1.5);
  return PiecewiseMap({
      {{-kInf, -1.0, false, true}, [e](double x) { return x + e; }, [](double) { return 1.0; }},
      {{-1.0, 0.0, false, false},
       [e, c](double x) { return -c / std::sqrt(1.0 / (x * x) - e); },
       [e, c](double x) { return c * std::pow(1.0 - e * x * x, -1.5); }},
      {{0.0, 0.0, true, true}, [](double) { return 0.0; }, {}},
      {{0.0, 1.0, false, false},
       [e](double x) { return (1.0 - e) * std::pow(x, 1.0 / (1.0 - e)); },
       [e](double x) { return std::pow(x, e / (1.0 - e)); }},
      {{1.0, kInf, true, false}, [e](double x) { return x - e; }, [](double) { return 1.0; }},
  });
}

inline PiecewiseMap example11_G(const Example11Params& p) {
  const double e = p.eps;
  const double c3 = std::pow(1.0 - e, 3.0);
  return PiecewiseMap({
      {{-kInf, e - 1.0, false, true}, [e](double y) { return y - e; }, [](double) { return 1.0; }},
      {{e - 1.0, 0.0, false, false},
       [e, c3](double y) { return -1.0 / std::sqrt(c3 / (y * y) + e); },
       [e, c3](double y) { return c3 / (y * y * y) * -std::pow(c3 / (y * y) + e, -1.5); }},
      {{0.0, 0.0, true, true}, [](double) { return 0.0; }, {}},
      {{0.0, 1.0 - e, false, false},
       [e](double y) { return std::pow(y / (1.0 - e), 1.0 - e); },
       [e](double y) { return std::pow(y / (1.0 - e), -e); }},
      {{1.0 - e, kInf, true, false}, [e](double y) { return y + e; }, [](double) { return 1.0; }},
  });
}

inline double oracle_H_11(const Example11Params& p, double x) { return example11_H(p)(x); }
inline double oracle_G_11(const Example11Params& p, double y) { return example11_G(p)(y); }

inline void check_eps_29(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("example-2.9 requires 0 < eps < 1");
}

/// Conjugacy for f = eps x, normalized so H(1) = 1 - eps; odd.
inline double oracle_H_29(double eps, double x) {
  check_eps_29(eps);
  if (x == 0.0) return 0.0;
  const double v = (1.0 - eps) * std::pow(std::abs(x), 1.0 / (1.0 - eps));
  return x > 0.0 ? v : -v;
}

inline double oracle_G_29(double eps, double y) {
  check_eps_29(eps);
  if (y == 0.0) return 0.0;
  const double v = std::pow(std::abs(y) / (1.0 - eps), 1.0 - eps);
  return y > 0.0 ? v : -v;
}

inline double oracle_dH_29(double eps, double x) {
  check_eps_29(eps);
  return std::pow(std::abs(x), eps / (1.0 - eps));
}

struct AffinePair {
  double H = 0.0;
  double G = 0.0;
};

/// H(x) = x - delta and G evaluated at H(x), which returns x.
inline AffinePair oracle_affine_211(double delta, double x) {
  const double h = x - delta;
  return {h, h + delta};
}

enum class SolutionBranch { Positive, Negative };

/// Solutions of example-1.1 through x(0) = 1 (positive) or x(0) = -1 (negative).
inline double oracle_solution_11(const Example11Params& p, SolutionBranch branch, double t) {
  const double e = p.eps;
  if (branch == SolutionBranch::Positive) {
    if (t <= 0.0) return (1.0 - e) * std::exp(-t) + e;
    return std::exp((-1.0 + e) * t);
  }
  if (t <= 0.0) return (e - 1.0) * std::exp(-t) - e;
  return -1.0 / std::sqrt((1.0 - e) * std::exp(2.0 * t) + e);
}

}  // namespace conjlab::oracles

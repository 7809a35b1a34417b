#pragma once

// Hypothesis data for the contraction setting: the contraction certificate,
// perturbation bounds and their aggregates, the Green-type integrals, the
// regularity constants and the constant-coefficient dichotomy spectrum.

#include "conjlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace conjlab {

/// ||U(t, s)|| <= k exp(-alpha (t - s)) for t >= s.
struct ContractionCertificate {
  double k = 1.0;
  double alpha = 1.0;

  bool valid() const { return k >= 1.0 && alpha > 0.0 && std::isfinite(k) && std::isfinite(alpha); }
  double envelope(double elapsed) const { return k * std::exp(-alpha * elapsed); }
};

/// Time range over which the suprema defining C1, C2 and theta are sampled.
struct AggregateOptions {
  double lo = -50.0;
  double hi = 50.0;
  double anchor_spacing = 0.25;
  double step = 1e-3;
  double tol = 1e-10;
};

struct PerturbationSpec {
  enum class Kind { None, General, Constant, LinearHomogeneous };

  Kind kind = Kind::General;
  int dim = 1;
  /// The perturbation as it enters the flow x' = A(t)x + f(t, x).
  VectorField f;
  /// Pointwise bound and Lipschitz modulus of bounded_part().
  ScalarFn mu;
  ScalarFn r;
  std::optional<double> constant_mu;
  std::optional<double> constant_r;

  /// Set for f(t, x) = B(t)x. Such an f is unbounded, so the bound data and the
  /// conjugacy construction refer to the radially saturated field
  /// B(t) x min(1, R / ||x||) with R = saturation_radius.
  std::optional<TimeMatrixField> linear;
  double linear_bound = 0.0;
  double saturation_radius = 1.0;

  double C1 = 0.0;
  double C2 = 0.0;
  double theta = 0.0;
  /// Decay rate theta was computed with.
  double alpha = 1.0;
  AggregateOptions range;

  bool is_linear() const { return kind == Kind::LinearHomogeneous && linear.has_value(); }

  /// The bounded field used by the conjugacy construction.
  VectorField bounded_part() const {
    if (!is_linear()) return f;
    return [B = *linear, R = saturation_radius](double t, const Vector& x) -> Vector {
      const double nx = x.norm();
      if (nx <= R) return B(t) * x;
      return B(t) * (x * (R / nx));
    };
  }

  double mu_sup() const {
    if (constant_mu) return *constant_mu;
    return sampled_sup(mu);
  }
  double r_sup() const {
    if (constant_r) return *constant_r;
    return sampled_sup(r);
  }

 private:
  double sampled_sup(const ScalarFn& fn) const {
    double best = 0.0;
    const long n = static_cast<long>(std::ceil((range.hi - range.lo) / 0.01));
    for (long i = 0; i <= n; ++i) best = std::max(best, fn(range.lo + 0.01 * static_cast<double>(i)));
    return best;
  }
};

struct QuadratureSpec {
  double window = 30.0;
  double step = 1e-3;
  /// Largest acceptable analytic tail bound.
  double tol = 1e-8;
};

struct GreenResult {
  Vector value;
  double tail_bound = 0.0;
};

struct ScalarGreenResult {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// Smallest window with amplitude * exp(-alpha W) / alpha <= tol.
inline double required_window(double amplitude, double alpha, double tol) {
  if (amplitude <= 0.0) return 0.0;
  return std::max(0.0, std::log(amplitude / (alpha * tol)) / alpha);
}

namespace detail {

/// Even number of Simpson panels covering `window` with spacing <= step.
inline std::pair<long, double> simpson_grid(double window, double step) {
  if (!(window > 0.0)) throw std::invalid_argument("quadrature window must be positive");
  if (!(step > 0.0)) throw std::invalid_argument("quadrature step must be positive");
  long n = static_cast<long>(std::ceil(window / step - 1e-9));
  if (n % 2 == 1) ++n;
  n = std::max<long>(n, 2);
  return {n, window / static_cast<double>(n)};
}

inline double simpson_weight(long j, long n) {
  if (j == 0 || j == n) return 1.0;
  return (j % 2 == 1) ? 4.0 : 2.0;
}

inline void check_tail(double tail, const QuadratureSpec& spec, double amplitude, double alpha) {
  if (tail > spec.tol) {
    const double need = required_window(amplitude, alpha, spec.tol);
    std::ostringstream msg;
    msg << "tail bound " << tail << " exceeds tolerance " << spec.tol << "; window must be at least "
        << need;
    throw TailTooLarge(need, msg.str());
  }
}

}  // namespace detail

/// Truncated K(phi)(t) = int_{t-W}^{t} U(t, s) phi(s) ds by composite Simpson.
/// U(t, s) comes from integrating dW/dsigma = W A(t - sigma) backward from t.
inline GreenResult green_operator(const std::function<Vector(double)>& phi,
                                  const TimeMatrixField& A, const ContractionCertificate& cert,
                                  double t, const QuadratureSpec& spec) {
  const auto [n, h] = detail::simpson_grid(spec.window, spec.step);
  const int dim = A.dim;
  Vector acc = Vector::Zero(dim);
  double phi_sup = 0.0;
  long j = 0;
  auto rhs = [&A, t](double sigma, const Matrix& w) -> Matrix { return w * A(t - sigma); };
  march(rhs, 0.0, Matrix(Matrix::Identity(dim, dim)), spec.window, h,
        [&](double sigma, const Matrix& w) {
          const Vector p = phi(t - sigma);
          phi_sup = std::max(phi_sup, p.norm());
          acc += detail::simpson_weight(j, n) * (w * p);
          ++j;
          return true;
        });
  GreenResult out;
  out.value = acc * (h / 3.0);
  out.tail_bound = cert.k * phi_sup * std::exp(-cert.alpha * spec.window) / cert.alpha;
  detail::check_tail(out.tail_bound, spec, cert.k * phi_sup, cert.alpha);
  return out;
}

/// Truncated L(b)(t) = int_{t-W}^{t} exp(-alpha (t - s)) b(s) ds.
inline ScalarGreenResult scalar_green_bound(const ScalarFn& b, double alpha, double t,
                                            const QuadratureSpec& spec) {
  if (!(alpha > 0.0)) throw std::invalid_argument("scalar_green_bound: alpha must be positive");
  const auto [n, h] = detail::simpson_grid(spec.window, spec.step);
  double acc = 0.0;
  double b_sup = 0.0;
  for (long j = 0; j <= n; ++j) {
    const double sigma = h * static_cast<double>(j);
    const double v = b(t - sigma);
    b_sup = std::max(b_sup, std::abs(v));
    acc += detail::simpson_weight(j, n) * std::exp(-alpha * sigma) * v;
  }
  ScalarGreenResult out;
  out.value = acc * h / 3.0;
  out.tail_bound = b_sup * std::exp(-alpha * spec.window) / alpha;
  detail::check_tail(out.tail_bound, spec, b_sup, alpha);
  return out;
}

/// sup over anchors a in [lo, hi] of int_a^{a+1} fn(s) ds.
inline double unit_window_sup(const ScalarFn& fn, const AggregateOptions& opt) {
  const auto [n, h] = detail::simpson_grid(1.0, opt.step);
  double best = 0.0;
  const long anchors = static_cast<long>(std::floor((opt.hi - opt.lo) / opt.anchor_spacing + 1e-9));
  for (long a = 0; a <= anchors; ++a) {
    const double start = opt.lo + opt.anchor_spacing * static_cast<double>(a);
    double acc = 0.0;
    for (long j = 0; j <= n; ++j) {
      acc += detail::simpson_weight(j, n) * fn(start + h * static_cast<double>(j));
    }
    best = std::max(best, acc * h / 3.0);
  }
  return best;
}

/// sup over anchors of L(b)(t). Uses L(b)(t + d) = e^{-alpha d} L(b)(t) + int_t^{t+d} ...,
/// so only the first anchor needs the full window.
inline double green_bound_sup(const ScalarFn& b, double alpha, double b_sup,
                              const AggregateOptions& opt) {
  if (b_sup <= 0.0) return 0.0;
  QuadratureSpec spec;
  spec.step = opt.step;
  spec.tol = opt.tol;
  spec.window = std::max(1.0, required_window(b_sup, alpha, opt.tol) * 1.01);
  double current = scalar_green_bound(b, alpha, opt.lo, spec).value;
  double best = current;
  const auto [n, h] = detail::simpson_grid(opt.anchor_spacing, opt.step);
  const double d = opt.anchor_spacing;
  const long anchors = static_cast<long>(std::floor((opt.hi - opt.lo) / d + 1e-9));
  for (long a = 1; a <= anchors; ++a) {
    const double end = opt.lo + d * static_cast<double>(a);
    double inc = 0.0;
    for (long j = 0; j <= n; ++j) {
      const double sigma = h * static_cast<double>(j);
      inc += detail::simpson_weight(j, n) * std::exp(-alpha * sigma) * b(end - sigma);
    }
    current = std::exp(-alpha * d) * current + inc * h / 3.0;
    best = std::max(best, current);
  }
  return best;
}

/// Fills C1, C2 and theta from mu and r.
inline void compute_aggregates(PerturbationSpec& pert, double alpha,
                               const AggregateOptions& opt = {}) {
  pert.alpha = alpha;
  pert.range = opt;
  pert.C1 = unit_window_sup(pert.mu, opt);
  pert.C2 = unit_window_sup(pert.r, opt);
  pert.theta = green_bound_sup(pert.r, alpha, pert.r_sup(), opt);
}

inline PerturbationSpec make_perturbation(int dim, VectorField f, ScalarFn mu, ScalarFn r,
                                          double alpha, const AggregateOptions& opt = {}) {
  PerturbationSpec p;
  p.kind = PerturbationSpec::Kind::General;
  p.dim = dim;
  p.f = std::move(f);
  p.mu = std::move(mu);
  p.r = std::move(r);
  compute_aggregates(p, alpha, opt);
  return p;
}

/// f with constant bounds |f| <= mu and Lipschitz constant L_f.
inline PerturbationSpec make_uniform_perturbation(int dim, VectorField f, double mu, double lip,
                                                  double alpha, const AggregateOptions& opt = {}) {
  PerturbationSpec p = make_perturbation(
      dim, std::move(f), [mu](double) { return mu; }, [lip](double) { return lip; }, alpha, opt);
  p.constant_mu = mu;
  p.constant_r = lip;
  return p;
}

inline PerturbationSpec zero_perturbation(int dim, double alpha) {
  PerturbationSpec p = make_uniform_perturbation(
      dim, [dim](double, const Vector&) -> Vector { return Vector::Zero(dim); }, 0.0, 0.0, alpha);
  p.kind = PerturbationSpec::Kind::None;
  return p;
}

inline PerturbationSpec constant_perturbation(const Vector& c, double alpha) {
  PerturbationSpec p = make_uniform_perturbation(
      static_cast<int>(c.size()), [c](double, const Vector&) -> Vector { return c; }, c.norm(), 0.0,
      alpha);
  p.kind = PerturbationSpec::Kind::Constant;
  return p;
}

/// f(t, x) = B(t)x with sup ||B|| <= delta.
inline PerturbationSpec linear_perturbation(const TimeMatrixField& B, double delta, double alpha,
                                            double saturation_radius = 1.0,
                                            const AggregateOptions& opt = {}) {
  PerturbationSpec p;
  p.kind = PerturbationSpec::Kind::LinearHomogeneous;
  p.dim = B.dim;
  p.f = [B](double t, const Vector& x) -> Vector { return B(t) * x; };
  p.linear = B;
  p.linear_bound = delta;
  p.saturation_radius = saturation_radius;
  if (B.constant) {
    const double nb = op_norm(*B.constant);
    p.mu = [nb, saturation_radius](double) { return nb * saturation_radius; };
    p.r = [nb](double) { return nb; };
    p.constant_mu = nb * saturation_radius;
    p.constant_r = nb;
  } else {
    p.mu = [B, saturation_radius](double t) { return op_norm(B(t)) * saturation_radius; };
    p.r = [B](double t) { return op_norm(B(t)); };
  }
  compute_aggregates(p, alpha, opt);
  return p;
}

struct AdmissibilityOptions {
  std::vector<double> times{-10.0, -5.0, -1.0, 0.0, 0.5, 1.0, 5.0, 10.0};
  int random_states = 64;
  double state_radius = 5.0;
  unsigned seed = 42;
  double step = 1e-3;
};

struct AdmissibilityReport {
  bool a1 = false;
  bool a2 = false;
  bool a3 = false;
  bool a4 = false;
  double theta = 0.0;
  double inverse_k = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  /// Reduced conditions, checked when mu and r are constant.
  bool reduced_checked = false;
  bool a2_tilde = false;
  bool a3_tilde = false;
  bool a4_tilde = false;
  double mu = 0.0;
  double lipschitz = 0.0;
  std::vector<std::string> notes;

  bool admissible() const { return a1 && a2 && a3 && a4; }

  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    if (!a1) out.emplace_back("contraction");
    if (!a2) out.emplace_back("bounded_perturbation");
    if (!a3) out.emplace_back("lipschitz_perturbation");
    if (!a4) out.emplace_back("small_aggregate");
    return out;
  }
};

inline std::vector<Vector> sample_states(int dim, const AdmissibilityOptions& opt) {
  std::vector<Vector> out;
  if (dim == 1) {
    for (int i = 0; i <= 100; ++i) {
      out.push_back(scalar_vector(-opt.state_radius + opt.state_radius * 0.02 * i));
    }
    for (double v : {-1.0, -0.999, -0.5, -1e-3, 0.0, 1e-3, 0.5, 0.999, 1.0}) {
      out.push_back(scalar_vector(v));
    }
    return out;
  }
  std::mt19937 rng(opt.seed);
  std::uniform_real_distribution<double> unif(-opt.state_radius, opt.state_radius);
  out.push_back(Vector::Zero(dim));
  for (int i = 0; i < dim; ++i) {
    for (double v : {-1.0, 1.0}) {
      Vector e = Vector::Zero(dim);
      e(i) = v;
      out.push_back(e);
    }
  }
  for (int i = 0; i < opt.random_states; ++i) {
    Vector x(dim);
    for (int j = 0; j < dim; ++j) x(j) = unif(rng);
    out.push_back(x);
  }
  return out;
}

/// Samples the contraction, bound, Lipschitz and aggregate hypotheses (and
/// the constant-bound reductions) on finite grids. Contraction is only
/// sampled when the linear part is supplied.
inline AdmissibilityReport check_admissibility(const ContractionCertificate& cert,
                                               const PerturbationSpec& pert,
                                               const TimeMatrixField* A = nullptr,
                                               const AdmissibilityOptions& opt = {}) {
  AdmissibilityReport rep;
  rep.C1 = pert.C1;
  rep.C2 = pert.C2;
  rep.theta = pert.theta;
  rep.inverse_k = cert.k > 0.0 ? 1.0 / cert.k : 0.0;

  rep.a1 = cert.valid();
  if (rep.a1 && A != nullptr) {
    for (double s : {-10.0, 0.0, 3.0}) {
      march([A](double t, const Matrix& u) -> Matrix { return (*A)(t) * u; }, s,
            Matrix(Matrix::Identity(A->dim, A->dim)), s + 10.0, opt.step,
            [&](double t, const Matrix& u) {
              if (op_norm(u) > cert.envelope(t - s) * (1.0 + 1e-6)) rep.a1 = false;
              return rep.a1;
            });
    }
    if (!rep.a1) rep.notes.emplace_back("sampled ||U(t,s)|| exceeds k e^{-alpha(t-s)}");
  } else if (!rep.a1) {
    rep.notes.emplace_back("certificate requires k >= 1 and alpha > 0");
  }

  const VectorField g = pert.bounded_part();
  const auto states = sample_states(pert.dim, opt);
  rep.a2 = std::isfinite(pert.C1);
  rep.a3 = std::isfinite(pert.C2);
  for (double t : opt.times) {
    const double mu = pert.mu(t);
    const double r = pert.r(t);
    std::vector<Vector> values;
    values.reserve(states.size());
    for (const auto& x : states) values.push_back(g(t, x));
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (values[i].norm() > mu * (1.0 + 1e-12) + 1e-15) rep.a2 = false;
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        const double gap = (values[i] - values[j]).norm();
        const double sep = (states[i] - states[j]).norm();
        if (gap > r * sep * (1.0 + 1e-9) + 1e-14) rep.a3 = false;
      }
    }
  }
  if (!rep.a2) rep.notes.emplace_back("sampled ||f(t,x)|| exceeds mu(t)");
  if (!rep.a3) rep.notes.emplace_back("sampled Lipschitz quotient exceeds r(t)");
  rep.a4 = rep.theta < rep.inverse_k;
  if (!rep.a4) {
    std::ostringstream msg;
    msg << "theta = " << rep.theta << " is not below 1/k = " << rep.inverse_k;
    rep.notes.push_back(msg.str());
  }

  if (pert.constant_mu && pert.constant_r) {
    rep.reduced_checked = true;
    rep.mu = *pert.constant_mu;
    rep.lipschitz = *pert.constant_r;
    rep.a2_tilde = rep.a2 && std::isfinite(rep.mu);
    rep.a3_tilde = rep.a3;
    rep.a4_tilde = rep.lipschitz <= cert.alpha / cert.k;
  }
  if (pert.is_linear()) {
    rep.notes.emplace_back("linear-homogeneous perturbation: bounds refer to the field saturated at radius " +
                           std::to_string(pert.saturation_radius));
  }
  return rep;
}

/// Constants from the regularity argument: Lipschitz constant of H and the
/// Hoelder pair (p2, q) of G.
struct RegularityConstants {
  double p1 = 1.0;
  double lambda = 0.0;
  double lambda_lower_bound = 0.0;
  /// Largest q found by bisection; meaningful only when admissible.
  double q = 0.0;
  double q_upper = 0.0;
  double p2 = 1.0;
  bool admissible = false;
};

inline double lipschitz_constant_p1(double k, double C2) {
  if (C2 == 0.0) return 1.0;
  const double kc = k * C2;
  return (1.0 + k * k * C2 * std::exp(kc) - std::exp(-kc)) / (1.0 - std::exp(-kc));
}

inline double holder_constraint_lhs(double k, double alpha, double C2, double q) {
  return C2 * std::pow(k, q + 1.0) / (std::exp(alpha - alpha * q) - 1.0);
}

inline double lambda_lower_bound(double k, double alpha, double C1, double C2) {
  return 3.0 * k * C1 / (1.0 - std::exp(-alpha)) + 1.5 * k * k * C2;
}

struct ConstraintCheck {
  bool lambda_ok = false;
  bool q_ok = false;
  bool third_ok = false;
  bool all() const { return lambda_ok && q_ok && third_ok; }
};

/// Re-evaluates the three inequalities on lambda and q directly.
inline ConstraintCheck verify_constraints(const ContractionCertificate& cert, double C1, double C2,
                                          const RegularityConstants& rc) {
  ConstraintCheck c;
  c.lambda_ok = rc.lambda > lambda_lower_bound(cert.k, cert.alpha, C1, C2);
  c.q_ok = rc.q > 0.0 && rc.q < cert.alpha / (cert.alpha + 1.0);
  const double lhs = holder_constraint_lhs(cert.k, cert.alpha, C2, rc.q);
  c.third_ok = lhs >= 0.0 && lhs < 1.0 / 3.0;
  return c;
}

inline RegularityConstants compute_regularity_constants(const ContractionCertificate& cert,
                                                        double C1, double C2) {
  if (!(C1 >= 0.0) || !(C2 >= 0.0)) {
    throw std::invalid_argument("compute_regularity_constants: C1 and C2 must be nonnegative");
  }
  if (!cert.valid()) throw std::invalid_argument("compute_regularity_constants: invalid certificate");
  const double k = cert.k;
  const double alpha = cert.alpha;
  RegularityConstants rc;
  rc.p1 = lipschitz_constant_p1(k, C2);
  rc.lambda_lower_bound = lambda_lower_bound(k, alpha, C1, C2);
  rc.lambda = rc.lambda_lower_bound > 0.0 ? 1.001 * rc.lambda_lower_bound : 1e-3;
  rc.p2 = 1.0 + rc.lambda;
  rc.q_upper = alpha / (alpha + 1.0);

  // The constraint is increasing in q; keep `lo` feasible throughout.
  auto feasible = [&](double q) { return holder_constraint_lhs(k, alpha, C2, q) < 1.0 / 3.0; };
  double lo = 0.0;
  double hi = rc.q_upper;
  if (!feasible(lo)) {
    rc.admissible = false;
    return rc;
  }
  if (feasible(hi)) {
    rc.q = hi * (1.0 - 1e-9);
  } else {
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    rc.q = lo;
  }
  rc.admissible = rc.q > 0.0;
  return rc;
}

/// Weighted bounds mu(t)e^{-eps|t|}, r(t)e^{-eps|t|}. The perturbation itself
/// is weighted the same way so the returned spec stays self-consistent.
inline PerturbationSpec nonuniform_weighting(const PerturbationSpec& pert, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("nonuniform_weighting: eps must be nonnegative");
  if (eps == 0.0) return pert;
  PerturbationSpec out = pert;
  auto weight = [eps](double t) { return std::exp(-eps * std::abs(t)); };
  out.f = [f = pert.f, weight](double t, const Vector& x) -> Vector { return weight(t) * f(t, x); };
  out.mu = [mu = pert.mu, weight](double t) { return weight(t) * mu(t); };
  out.r = [r = pert.r, weight](double t) { return weight(t) * r(t); };
  out.constant_mu.reset();
  out.constant_r.reset();
  if (pert.is_linear()) {
    TimeMatrixField B = *pert.linear;
    B.eval = [inner = pert.linear->eval, weight](double t) -> Matrix { return weight(t) * inner(t); };
    B.constant.reset();
    out.linear = B;
  }
  compute_aggregates(out, pert.alpha, pert.range);
  return out;
}

struct WeightingIdentity {
  double weighted = 0.0;  // L{e^{eps|.|} mu~}(t)
  double original = 0.0;  // L{mu}(t)
};

inline WeightingIdentity weighting_identity(const PerturbationSpec& pert, double eps, double alpha,
                                            double t, const QuadratureSpec& spec) {
  const PerturbationSpec w = nonuniform_weighting(pert, eps);
  WeightingIdentity out;
  out.weighted = scalar_green_bound(
                     [&w, eps](double s) { return std::exp(eps * std::abs(s)) * w.mu(s); }, alpha,
                     t, spec)
                     .value;
  out.original = scalar_green_bound(pert.mu, alpha, t, spec).value;
  return out;
}

struct SpectrumResult {
  /// Sorted, pairwise disjoint closed intervals [a_i, b_i].
  std::vector<std::pair<double, double>> intervals;
  /// All intervals strictly left of zero.
  bool contraction = false;

  bool contains(double gamma) const {
    return std::any_of(intervals.begin(), intervals.end(), [gamma](const auto& iv) {
      return iv.first <= gamma && gamma <= iv.second;
    });
  }
};

/// For constant A the dichotomy spectrum is the set of real parts of the
/// eigenvalues; each distinct value is a degenerate interval.
inline SpectrumResult dichotomy_spectrum_constant(const Matrix& A, double merge_tol = 1e-12) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw std::invalid_argument("dichotomy_spectrum_constant: matrix must be square and nonempty");
  }
  std::vector<double> re;
  if (A.rows() == 1) {
    re.push_back(A(0, 0));
  } else {
    Eigen::EigenSolver<Matrix> es(A, false);
    if (es.info() != Eigen::Success) throw NumericError("eigenvalue computation failed");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) re.push_back(es.eigenvalues()(i).real());
  }
  for (double v : re) {
    if (!std::isfinite(v)) throw NumericError("non-finite eigenvalue");
  }
  std::sort(re.begin(), re.end());
  SpectrumResult out;
  for (double v : re) {
    if (!out.intervals.empty() && v - out.intervals.back().second <= merge_tol) {
      out.intervals.back().second = std::max(out.intervals.back().second, v);
    } else {
      out.intervals.emplace_back(v, v);
    }
  }
  out.contraction = out.intervals.back().second < 0.0;
  return out;
}

/// Empirical (k, alpha): least-squares slope of log||U(s + d, s)|| against d
/// gives alpha; k is then the smallest constant (>= 1) bounding every sample.
inline ContractionCertificate estimate_contraction(const TimeMatrixField& A, double horizon,
                                                   double step, int anchors = 8,
                                                   int samples_per_anchor = 100) {
  if (!(horizon > 0.0)) throw std::invalid_argument("estimate_contraction: horizon must be positive");
  struct Sample {
    double d;
    double log_norm;
  };
  std::vector<Sample> samples;
  const double spacing = horizon / static_cast<double>(samples_per_anchor);
  for (int a = 0; a < anchors; ++a) {
    const double s = horizon * static_cast<double>(a) / static_cast<double>(anchors);
    Matrix u = Matrix::Identity(A.dim, A.dim);
    double t = s;
    for (int i = 1; i <= samples_per_anchor; ++i) {
      const double t_next = s + spacing * static_cast<double>(i);
      u = march([&A](double tt, const Matrix& m) -> Matrix { return A(tt) * m; }, t, u, t_next, step);
      t = t_next;
      samples.push_back({t - s, std::log(op_norm(u))});
    }
  }
  double sd = 0.0, sl = 0.0;
  for (const auto& smp : samples) {
    sd += smp.d;
    sl += smp.log_norm;
  }
  const double m = static_cast<double>(samples.size());
  const double mean_d = sd / m;
  const double mean_l = sl / m;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& smp : samples) {
    sxy += (smp.d - mean_d) * (smp.log_norm - mean_l);
    sxx += (smp.d - mean_d) * (smp.d - mean_d);
  }
  const double alpha = -sxy / sxx;
  if (!(alpha > 0.0)) {
    std::ostringstream msg;
    msg << "transition matrix norm grows (fitted rate " << -alpha << ")";
    throw NotContractive(msg.str());
  }
  double log_k = 0.0;
  for (const auto& smp : samples) log_k = std::max(log_k, smp.log_norm + alpha * smp.d);
  return {std::exp(log_k), alpha};
}

}  // namespace conjlab

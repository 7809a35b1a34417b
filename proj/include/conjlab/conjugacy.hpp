#pragma once

// Numerical conjugacy between x' = A(t)x + f(t, x) and y' = A(t)y.
//
//   H(t, x) = x - int_{-inf}^{t} U(t, s) f(s, X(s, t, x)) ds
//   G(t, y) = y + g(t),  g = T g,  (T z)(s) = int_{-inf}^{s} U(s, u) f(u, Y(u, t, y) + z(u)) du
//
// Both improper integrals are truncated to [t - window, t]. H is a single
// backward sweep that carries X, U(t, s) and the running integral together.
// G is a Picard iteration on a uniform grid: every sweep solves
// z' = A z + f(s, Y + z_prev) forward from z(t - window) = 0, which is the
// truncated T applied to z_prev.
//
// For f(t, x) = B(t)x the integrals diverge, so both maps are built for the
// field saturated outside radius R and moved to the given point with the
// flows: H(t, x) = U(t, s) H_R(s, X(s, t, x)) once k ||X(s)|| <= R, and G
// symmetrically.

#include "conjlab/parallel.hpp"
#include "conjlab/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace conjlab {

struct ConjugacyOptions {
  /// Target for the truncation error of H and G.
  double tol = 1e-4;
  double step = 1e-3;
  /// Overrides the window derived from tol.
  std::optional<double> window;
  double picard_tol = 1e-8;
  int picard_max_iter = 200;
  /// States up to this norm must survive the backward sweep without overflow.
  double max_state_norm = 10.0;
};

namespace detail {

struct SweepState {
  Vector x;  // X(s, t, xi)
  Matrix w;  // U(t, s)
  Vector j;  // int_s^t U(t, u) f(u, X(u)) du
};

inline SweepState operator+(const SweepState& a, const SweepState& b) {
  return {a.x + b.x, a.w + b.w, a.j + b.j};
}
inline SweepState operator*(double c, const SweepState& a) { return {c * a.x, c * a.w, c * a.j}; }

inline bool within_overflow(const SweepState& s) {
  return conjlab::within_overflow(s.x) && conjlab::within_overflow(s.w) &&
         conjlab::within_overflow(s.j);
}

}  // namespace detail

class ConjugacyEvaluator {
 public:
  explicit ConjugacyEvaluator(ScenarioSystem sys, ConjugacyOptions opt = {})
      : sys_(std::move(sys)), opt_(opt), field_(sys_.pert.bounded_part()) {
    const double k = sys_.cert.k;
    const double alpha = sys_.cert.alpha;
    const double C1 = sys_.pert.C1;
    const double C2 = sys_.pert.C2;
    if (!sys_.cert.valid()) throw std::invalid_argument("ConjugacyEvaluator: invalid certificate");
    if (!(opt_.tol > 0.0) || !(opt_.step > 0.0) || !(opt_.picard_tol > 0.0) ||
        opt_.picard_max_iter < 1) {
      throw std::invalid_argument("ConjugacyEvaluator: tolerances and step must be positive");
    }
    if (!(sys_.pert.theta * k < 1.0)) {
      std::ostringstream msg;
      msg << "theta * k = " << sys_.pert.theta * k << " >= 1: Picard map does not contract";
      throw std::invalid_argument(msg.str());
    }
    if (!(alpha > k * C2)) {
      throw std::invalid_argument("ConjugacyEvaluator: truncated Picard scheme needs alpha > k C2");
    }
    if (sys_.pert.is_linear() && !(alpha > k * sys_.pert.linear_bound)) {
      throw std::invalid_argument("ConjugacyEvaluator: linear perturbation needs k delta < alpha");
    }
    const double geo = 1.0 - std::exp(-alpha);
    const double half = 0.5 * opt_.tol;
    double w_h = 0.0;
    double w_g = 0.0;
    if (C1 > 0.0) {
      w_h = std::log(k * C1 / (geo * half)) / alpha;
      const double rate = alpha - k * C2;
      w_g = std::log(k * std::exp(k * C2) * (k * C1 / geo) / half) / rate;
    }
    window_ = opt_.window ? *opt_.window : std::max({w_h, w_g, 1.0});
    if (!(window_ > 0.0)) throw std::invalid_argument("ConjugacyEvaluator: window must be positive");

    const double growth = std::max(sys_.A.bound, 1e-3);
    const double offset = sys_.pert.mu_sup() / growth;
    window_cap_ = std::log(kOverflowThreshold / (opt_.max_state_norm + offset + 1.0)) / growth;
    if (window_ > window_cap_) {
      window_ = window_cap_;
      capped_ = true;
    }
    tail_bound_ = k * C1 * std::exp(-alpha * window_) / geo;
    g_tail_bound_ = (alpha > k * C2) ? k * std::exp(k * C2) * (k * C1 / geo) *
                                           std::exp(-(alpha - k * C2) * window_)
                                     : kInfinity;
  }

  const ScenarioSystem& system() const { return sys_; }
  const ConjugacyOptions& options() const { return opt_; }
  double window() const { return window_; }
  double step() const { return opt_.step; }
  double picard_tol() const { return opt_.picard_tol; }
  int picard_max_iter() const { return opt_.picard_max_iter; }
  /// Truncation bound for H: k C1 e^{-alpha W} / (1 - e^{-alpha}).
  double tail_bound() const { return tail_bound_; }
  /// Truncation bound for G from the Bellman estimate of the Picard fixed point.
  double g_tail_bound() const { return g_tail_bound_; }
  double window_cap() const { return window_cap_; }
  bool window_capped() const { return capped_; }
  const VectorField& bounded_field() const { return field_; }

  /// H for the bounded field at (t, x), without transport.
  Vector h_direct(double t, const Vector& x, double step) const {
    const int n = sys_.dim();
    const TimeMatrixField& A = sys_.A;
    const VectorField& f = field_;
    auto rhs = [&A, &f, t](double sigma, const detail::SweepState& st) -> detail::SweepState {
      const double s = t - sigma;
      const Matrix a = A(s);
      const Vector fx = f(s, st.x);
      return {Vector(-(a * st.x + fx)), Matrix(st.w * a), Vector(st.w * fx)};
    };
    detail::SweepState init{x, Matrix::Identity(n, n), Vector::Zero(n)};
    try {
      const detail::SweepState end = march(rhs, 0.0, init, window_, step);
      return x - end.j;
    } catch (const IntegrationDiverged& e) {
      std::ostringstream msg;
      msg << "backward flow from x overflowed after " << e.last_valid_time() << " of window "
          << window_;
      throw WindowTooLarge(window_, t - e.last_valid_time(), msg.str());
    }
  }

  struct PicardResult {
    Vector value;
    int iterations = 0;
    double final_defect = 0.0;
    std::vector<double> defects;
    /// g_m(t) for m = 0 .. iterations.
    std::vector<Vector> endpoint_iterates;
  };

  /// G for the bounded field at (t, y), without transport.
  PicardResult g_direct(double t, const Vector& y) const {
    const int n = sys_.dim();
    const TimeMatrixField& A = sys_.A;
    const double t_start = t - window_;
    const auto [steps, h] = uniform_grid(t_start, t, opt_.step);
    const std::size_t N = static_cast<std::size_t>(steps);

    // Y(s, t, y) on the half-step grid s_i = t_start + i h / 2.
    std::vector<Vector> Y(2 * N + 1);
    {
      std::size_t idx = 2 * N;
      try {
        march([&A](double s, const Vector& v) -> Vector { return A(s) * v; }, t, y, t_start,
              0.5 * h, [&](double, const Vector& v) {
                Y[idx] = v;
                if (idx == 0) return false;
                --idx;
                return true;
              });
      } catch (const IntegrationDiverged& e) {
        throw WindowTooLarge(window_, e.last_valid_time(), e.what());
      }
    }
    auto node_time = [t_start, h](std::size_t half_index) {
      return t_start + 0.5 * h * static_cast<double>(half_index);
    };

    PicardResult res;
    std::vector<Vector> z(N + 1, Vector::Zero(n));
    std::vector<Vector> z_next(N + 1, Vector::Zero(n));
    std::vector<Vector> F(2 * N + 1);
    res.endpoint_iterates.push_back(z[N]);
    double defect = kInfinity;
    for (int m = 1; m <= opt_.picard_max_iter; ++m) {
      for (std::size_t i = 0; i <= 2 * N; ++i) {
        const Vector zi = (i % 2 == 0) ? z[i / 2] : Vector(0.5 * (z[i / 2] + z[i / 2 + 1]));
        F[i] = field_(node_time(i), Vector(Y[i] + zi));
      }
      z_next[0].setZero();
      defect = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        const double s = node_time(2 * j);
        const Matrix a0 = A(s);
        const Matrix a1 = A(s + 0.5 * h);
        const Matrix a2 = A(s + h);
        const Vector& zj = z_next[j];
        const Vector k1 = a0 * zj + F[2 * j];
        const Vector k2 = a1 * Vector(zj + 0.5 * h * k1) + F[2 * j + 1];
        const Vector k3 = a1 * Vector(zj + 0.5 * h * k2) + F[2 * j + 1];
        const Vector k4 = a2 * Vector(zj + h * k3) + F[2 * j + 2];
        z_next[j + 1] = zj + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      for (std::size_t j = 0; j <= N; ++j) defect = std::max(defect, (z_next[j] - z[j]).norm());
      std::swap(z, z_next);
      res.defects.push_back(defect);
      res.endpoint_iterates.push_back(z[N]);
      res.iterations = m;
      if (!std::isfinite(defect)) break;
      if (defect < opt_.picard_tol) break;
    }
    res.final_defect = defect;
    if (!(defect < opt_.picard_tol)) {
      std::ostringstream msg;
      msg << "Picard iteration did not converge in " << res.iterations
          << " iterations (last defect " << defect << ")";
      throw NoConvergence(defect, msg.str());
    }
    res.value = y + z[N];
    return res;
  }

 private:
  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  ScenarioSystem sys_;
  ConjugacyOptions opt_;
  VectorField field_;
  double window_ = 0.0;
  double window_cap_ = 0.0;
  bool capped_ = false;
  double tail_bound_ = 0.0;
  double g_tail_bound_ = 0.0;
};

namespace detail {

inline double transport_radius(const ConjugacyEvaluator& ev) {
  return ev.system().pert.saturation_radius / ev.system().cert.k;
}

/// First grid time s >= t at which the forward orbit enters the transport ball.
inline std::pair<double, Vector> transport_forward(const ConjugacyEvaluator& ev, double t,
                                                   const Vector& x) {
  const ScenarioSystem& sys = ev.system();
  const double radius = transport_radius(ev);
  const double rate = sys.cert.alpha - sys.cert.k * sys.pert.linear_bound;
  const double horizon =
      std::log(std::max(1.0, sys.cert.k * x.norm() / radius)) / rate + 1.0;
  double reached = t;
  Vector at = x;
  march(nonlinear_rhs(sys.A, sys.pert.f), t, x, t + horizon, ev.step(),
        [&](double s, const Vector& v) {
          reached = s;
          at = v;
          return v.norm() > radius;
        });
  if (at.norm() > radius) throw NumericError("forward transport did not reach the saturation ball");
  return {reached, at};
}

}  // namespace detail

struct HEvaluation {
  Vector value;
  double tail_bound = 0.0;
  /// |H_step - H_2step|, a conservative quadrature error estimate.
  double quadrature_error = 0.0;
};

inline Vector evaluate_H(const ConjugacyEvaluator& ev, double t, const Vector& x) {
  if (x.size() != ev.system().dim()) throw std::invalid_argument("evaluate_H: dimension mismatch");
  if (!ev.system().pert.is_linear() || x.norm() <= detail::transport_radius(ev)) {
    return ev.h_direct(t, x, ev.step());
  }
  const auto [s, xs] = detail::transport_forward(ev, t, x);
  const Matrix back = transition_matrix(ev.system().A, t, s, ev.step());
  return back * ev.h_direct(s, xs, ev.step());
}

inline HEvaluation evaluate_H_detailed(const ConjugacyEvaluator& ev, double t, const Vector& x) {
  HEvaluation out;
  out.value = evaluate_H(ev, t, x);
  out.tail_bound = ev.tail_bound();
  if (!ev.system().pert.is_linear() || x.norm() <= detail::transport_radius(ev)) {
    out.quadrature_error = (ev.h_direct(t, x, 2.0 * ev.step()) - out.value).norm();
  }
  return out;
}

struct GEvaluation {
  Vector value;
  int iterations = 0;
  double final_defect = 0.0;
  std::vector<double> defects;
  std::vector<Vector> endpoint_iterates;
  /// Time the point was transported to (equals t without transport).
  double transport_time = 0.0;
};

inline GEvaluation evaluate_G_detailed(const ConjugacyEvaluator& ev, double t, const Vector& y) {
  if (y.size() != ev.system().dim()) throw std::invalid_argument("evaluate_G: dimension mismatch");
  const ScenarioSystem& sys = ev.system();
  auto pack = [](ConjugacyEvaluator::PicardResult&& r, Vector value, double s) {
    GEvaluation g;
    g.value = std::move(value);
    g.iterations = r.iterations;
    g.final_defect = r.final_defect;
    g.defects = std::move(r.defects);
    g.endpoint_iterates = std::move(r.endpoint_iterates);
    g.transport_time = s;
    return g;
  };
  if (!sys.pert.is_linear()) {
    auto r = ev.g_direct(t, y);
    Vector v = r.value;
    return pack(std::move(r), std::move(v), t);
  }
  const double radius = detail::transport_radius(ev);
  constexpr double kShift = 0.5;
  constexpr int kMaxShifts = 200;
  double s = t;
  Vector ys = y;
  for (int attempt = 0; attempt <= kMaxShifts; ++attempt) {
    auto r = ev.g_direct(s, ys);
    if (r.value.norm() <= radius) {
      Vector v = (s == t) ? r.value : flow(sys, s, r.value, t, ev.step());
      return pack(std::move(r), std::move(v), s);
    }
    ys = linear_flow(sys.A, s, ys, s + kShift, ev.step());
    s += kShift;
  }
  throw NumericError("evaluate_G: transport into the saturation ball failed");
}

inline Vector evaluate_G(const ConjugacyEvaluator& ev, double t, const Vector& y) {
  return evaluate_G_detailed(ev, t, y).value;
}

struct ResidualReport {
  double conjugation_residual = 0.0;
  double roundtrip_residual = 0.0;
  std::string samples;
};

/// sup_t ||H(t, X(t, tau, xi)) - U(t, tau) H(tau, xi)|| on a uniform grid of
/// `grid_points` times in [tau, tau + horizon].
inline ResidualReport conjugation_residual(const ConjugacyEvaluator& ev, double tau,
                                           const Vector& xi, double horizon, int grid_points = 51) {
  if (!(horizon > 0.0)) throw std::invalid_argument("conjugation_residual: horizon must be positive");
  if (grid_points < 2) throw std::invalid_argument("conjugation_residual: need at least 2 grid points");
  const ScenarioSystem& sys = ev.system();
  const double dt = horizon / static_cast<double>(grid_points - 1);
  std::vector<double> times(static_cast<std::size_t>(grid_points));
  std::vector<Vector> states(times.size());
  std::vector<Matrix> transitions(times.size());
  times[0] = tau;
  states[0] = xi;
  transitions[0] = Matrix::Identity(sys.dim(), sys.dim());
  for (std::size_t i = 1; i < times.size(); ++i) {
    times[i] = tau + dt * static_cast<double>(i);
    states[i] = flow(sys, times[i - 1], states[i - 1], times[i], ev.step());
    transitions[i] = transition_matrix(sys.A, times[i], times[i - 1], ev.step()) * transitions[i - 1];
  }
  const auto values =
      parallel_map(times.size(), [&](std::size_t i) { return evaluate_H(ev, times[i], states[i]); });
  ResidualReport rep;
  for (std::size_t i = 0; i < times.size(); ++i) {
    rep.conjugation_residual =
        std::max(rep.conjugation_residual, (values[i] - transitions[i] * values[0]).norm());
  }
  std::ostringstream desc;
  desc << grid_points << " times in [" << tau << ", " << tau + horizon << "], window "
       << ev.window() << ", step " << ev.step();
  rep.samples = desc.str();
  return rep;
}

/// sup of ||G(t, H(t, x)) - x|| and ||H(t, G(t, x)) - x|| over the points.
inline ResidualReport roundtrip_residual(const ConjugacyEvaluator& ev, double t,
                                         const std::vector<Vector>& points) {
  const auto errs = parallel_map(points.size(), [&](std::size_t i) {
    const Vector& p = points[i];
    const double a = (evaluate_G(ev, t, evaluate_H(ev, t, p)) - p).norm();
    const double b = (evaluate_H(ev, t, evaluate_G(ev, t, p)) - p).norm();
    return std::max(a, b);
  });
  ResidualReport rep;
  for (double e : errs) rep.roundtrip_residual = std::max(rep.roundtrip_residual, e);
  std::ostringstream desc;
  desc << points.size() << " points at t=" << t << ", window " << ev.window();
  rep.samples = desc.str();
  return rep;
}

struct GronwallResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
  /// false when t1 < t0 and the backward Bellman bound was used.
  bool forward = true;
};

/// Right-hand side of the flow-separation estimate. Forward in time this is
/// k e^{k C2} ||dx0|| e^{(k C2 - alpha)(t1 - t0)}. Backward, contraction says
/// nothing about U(t, s) for t < s, so the bound uses sup ||A|| instead:
/// ||dx0|| exp(sup||A|| |t1 - t0| + ([|t1 - t0|] + 1) C2).
inline double gronwall_bound(const ScenarioSystem& sys, double separation, double t0, double t1) {
  const double k = sys.cert.k;
  const double alpha = sys.cert.alpha;
  const double C2 = sys.pert.C2;
  const double span = std::abs(t1 - t0);
  if (t1 >= t0) return k * std::exp(k * C2) * separation * std::exp((k * C2 - alpha) * span);
  return separation * std::exp(sys.A.bound * span + (std::floor(span) + 1.0) * C2);
}

inline GronwallResult gronwall_check(const ScenarioSystem& sys, double t0, const Vector& x0,
                                     const Vector& x0bar, double t1, double step) {
  GronwallResult res;
  res.forward = t1 >= t0;
  res.lhs = flow_difference(sys, t0, x0, x0bar, t1, step);
  res.rhs = gronwall_bound(sys, (x0 - x0bar).norm(), t0, t1);
  res.margin = res.rhs - res.lhs;
  // Integration error allowance relative to the bound.
  res.pass = res.lhs <= res.rhs * (1.0 + 1e-6) + 1e-12;
  return res;
}

struct JacobianResult {
  Matrix jacobian;
  /// Largest entry gap between the offset h and 2h central differences.
  double richardson_gap = 0.0;
};

inline JacobianResult jacobian_H(const ConjugacyEvaluator& ev, double t, const Vector& x,
                                 double h_fd = 1e-5) {
  if (!(h_fd > 0.0)) throw std::invalid_argument("jacobian_H: offset must be positive");
  const int n = ev.system().dim();
  JacobianResult out;
  out.jacobian = Matrix::Zero(n, n);
  Matrix coarse = Matrix::Zero(n, n);
  const auto cols = parallel_map(static_cast<std::size_t>(n), [&](std::size_t i) {
    Vector e = Vector::Zero(n);
    e(static_cast<Eigen::Index>(i)) = 1.0;
    const Vector fine = (evaluate_H(ev, t, Vector(x + h_fd * e)) -
                         evaluate_H(ev, t, Vector(x - h_fd * e))) / (2.0 * h_fd);
    const Vector wide = (evaluate_H(ev, t, Vector(x + 2.0 * h_fd * e)) -
                         evaluate_H(ev, t, Vector(x - 2.0 * h_fd * e))) / (4.0 * h_fd);
    return std::pair<Vector, Vector>{fine, wide};
  });
  for (int i = 0; i < n; ++i) {
    out.jacobian.col(i) = cols[static_cast<std::size_t>(i)].first;
    coarse.col(i) = cols[static_cast<std::size_t>(i)].second;
  }
  out.richardson_gap = (out.jacobian - coarse).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace conjlab

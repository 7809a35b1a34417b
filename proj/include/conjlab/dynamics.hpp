#pragma once

// Fixed-step integration of non-autonomous linear and nonlinear flows.
//
// Everything here marches with classical RK4 on a uniform grid. A span
// [t0, t1] is split into ceil(|t1 - t0| / step) equal steps, so the last node
// lands exactly on t1 and results are reproducible bit for bit. Backward spans
// use a negative step, which is the same as integrating the time-reversed field
// forward.

#include "conjlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

namespace conjlab {

/// A(t): a time-dependent n x n coefficient matrix.
struct TimeMatrixField {
  std::function<Matrix(double)> eval;
  int dim = 1;
  /// Upper bound on sup_t ||A(t)||, used for growth estimates of backward flows.
  double bound = 0.0;
  /// Set when A does not depend on time.
  std::optional<Matrix> constant;

  Matrix operator()(double t) const { return eval(t); }
};

inline TimeMatrixField constant_field(const Matrix& m) {
  TimeMatrixField field;
  field.eval = [m](double) { return m; };
  field.dim = static_cast<int>(m.rows());
  field.bound = op_norm(m);
  field.constant = m;
  return field;
}

inline TimeMatrixField scalar_field(std::function<double(double)> a, double bound) {
  TimeMatrixField field;
  field.eval = [a = std::move(a)](double t) { return scalar_matrix(a(t)); };
  field.dim = 1;
  field.bound = bound;
  return field;
}

/// diag(rate_i + amplitude_i * cos(omega * t)).
inline TimeMatrixField diagonal_periodic(const std::vector<double>& rates,
                                         const std::vector<double>& amplitudes, double omega) {
  if (rates.empty() || rates.size() > static_cast<std::size_t>(kMaxDim)) {
    throw std::invalid_argument("diagonal_periodic: dimension must be in [1, 8]");
  }
  if (amplitudes.size() != rates.size()) {
    throw std::invalid_argument("diagonal_periodic: rates and amplitudes differ in length");
  }
  const bool is_constant =
      std::all_of(amplitudes.begin(), amplitudes.end(), [](double a) { return a == 0.0; });
  if (is_constant) {
    Matrix m = Matrix::Zero(static_cast<int>(rates.size()), static_cast<int>(rates.size()));
    for (std::size_t i = 0; i < rates.size(); ++i) m(i, i) = rates[i];
    return constant_field(m);
  }
  TimeMatrixField field;
  field.dim = static_cast<int>(rates.size());
  field.eval = [rates, amplitudes, omega](double t) {
    const int n = static_cast<int>(rates.size());
    Matrix m = Matrix::Zero(n, n);
    const double c = std::cos(omega * t);
    for (int i = 0; i < n; ++i) m(i, i) = rates[i] + amplitudes[i] * c;
    return m;
  };
  double bound = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const double b = std::abs(rates[i]) + std::abs(amplitudes[i]);
    bound += b * b;
  }
  field.bound = std::sqrt(bound);
  return field;
}

struct Trajectory {
  /// Integration order: strictly increasing for forward runs, strictly
  /// decreasing for backward runs. times.front() is the initial time.
  std::vector<double> times;
  std::vector<Vector> states;
  double t0 = 0.0;
  Vector x0;

  const Vector& final_state() const { return states.back(); }
};

/// Uniform grid for [t0, t1]: number of steps and signed step length.
inline std::pair<long, double> uniform_grid(double t0, double t1, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("step must be a positive finite number");
  }
  const double span = t1 - t0;
  if (span == 0.0) return {0, 0.0};
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(span) / step - 1e-9)));
  return {steps, span / static_cast<double>(steps)};
}

template <class State, class Rhs>
State rk4_step(const Rhs& rhs, double t, const State& y, double h) {
  const State k1 = rhs(t, y);
  const State k2 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = rhs(t + h, State(y + h * k3));
  return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

template <class State>
bool within_overflow(const State& y) {
  const double* p = y.data();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(p[i]) || std::abs(p[i]) > kOverflowThreshold) return false;
  }
  return true;
}

/// March y' = rhs(t, y) from t0 to t1. `visit(t, y)` is called on every node
/// including the first; returning false from it stops the march early.
template <class State, class Rhs, class Visit>
State march(const Rhs& rhs, double t0, State y, double t1, double step, Visit&& visit) {
  const auto [steps, h] = uniform_grid(t0, t1, step);
  double t = t0;
  if (!visit(t, static_cast<const State&>(y))) return y;
  for (long i = 0; i < steps; ++i) {
    State next = rk4_step(rhs, t, y, h);
    const double t_next = (i + 1 == steps) ? t1 : t0 + static_cast<double>(i + 1) * h;
    if (!within_overflow(next)) {
      std::ostringstream msg;
      msg << "integration diverged between t=" << t << " and t=" << t_next;
      throw IntegrationDiverged(t, msg.str());
    }
    y = std::move(next);
    t = t_next;
    if (!visit(t, static_cast<const State&>(y))) break;
  }
  return y;
}

template <class State, class Rhs>
State march(const Rhs& rhs, double t0, State y, double t1, double step) {
  return march(rhs, t0, std::move(y), t1, step, [](double, const State&) { return true; });
}

/// Right-hand side A(t)x + f(t, x).
inline auto nonlinear_rhs(const TimeMatrixField& A, const VectorField& f) {
  return [&A, &f](double t, const Vector& x) -> Vector { return A(t) * x + f(t, x); };
}

inline Trajectory integrate_nonlinear(const TimeMatrixField& A, const VectorField& f, double t0,
                                      const Vector& x0, double t1, double step) {
  if (x0.size() != A.dim) throw std::invalid_argument("integrate_nonlinear: dimension mismatch");
  Trajectory traj;
  traj.t0 = t0;
  traj.x0 = x0;
  const auto [steps, h] = uniform_grid(t0, t1, step);
  (void)h;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  march(nonlinear_rhs(A, f), t0, x0, t1, step, [&](double t, const Vector& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    return true;
  });
  return traj;
}

/// Endpoint only, without storing the trajectory.
inline Vector flow(const TimeMatrixField& A, const VectorField& f, double t0, const Vector& x0,
                   double t1, double step) {
  return march(nonlinear_rhs(A, f), t0, x0, t1, step);
}

inline Vector linear_flow(const TimeMatrixField& A, double t0, const Vector& y0, double t1,
                          double step) {
  return march([&A](double t, const Vector& y) -> Vector { return A(t) * y; }, t0, y0, t1, step);
}

/// U(t, s): integrates the matrix ODE dU/dt = A(t)U from U(s, s) = I.
inline Matrix transition_matrix(const TimeMatrixField& A, double t, double s, double step) {
  const Matrix id = Matrix::Identity(A.dim, A.dim);
  return march([&A](double tt, const Matrix& u) -> Matrix { return A(tt) * u; }, s, id, t, step);
}

/// Jacobian of the flow of x' = (A(t) + B(t))x with respect to the initial state.
inline Matrix integrate_variational(const TimeMatrixField& A, const TimeMatrixField& B, double t0,
                                    double t1, double step) {
  if (A.dim != B.dim) throw std::invalid_argument("integrate_variational: dimension mismatch");
  const Matrix id = Matrix::Identity(A.dim, A.dim);
  return march([&A, &B](double t, const Matrix& u) -> Matrix { return (A(t) + B(t)) * u; }, t0,
               id, t1, step);
}

inline double flow_difference(const TimeMatrixField& A, const VectorField& f, double t0,
                              const Vector& x0, const Vector& x0bar, double t1, double step) {
  return (flow(A, f, t0, x0, t1, step) - flow(A, f, t0, x0bar, t1, step)).norm();
}

}  // namespace conjlab

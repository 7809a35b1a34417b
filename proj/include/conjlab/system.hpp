#pragma once

#include "conjlab/assumptions.hpp"
#include "conjlab/dynamics.hpp"

#include <string>

namespace conjlab {

/// Linear part, perturbation and the contraction certificate that goes with them.
struct ScenarioSystem {
  TimeMatrixField A;
  PerturbationSpec pert;
  ContractionCertificate cert;
  std::string label;

  int dim() const { return A.dim; }
};

inline Trajectory integrate_nonlinear(const ScenarioSystem& sys, double t0, const Vector& x0,
                                      double t1, double step) {
  return integrate_nonlinear(sys.A, sys.pert.f, t0, x0, t1, step);
}

inline Vector flow(const ScenarioSystem& sys, double t0, const Vector& x0, double t1, double step) {
  return flow(sys.A, sys.pert.f, t0, x0, t1, step);
}

inline double flow_difference(const ScenarioSystem& sys, double t0, const Vector& x0,
                              const Vector& x0bar, double t1, double step) {
  return flow_difference(sys.A, sys.pert.f, t0, x0, x0bar, t1, step);
}

/// dX(t1, t0, xi)/dxi. Only linear-homogeneous perturbations are supported,
/// for which the Jacobian does not depend on xi.
inline Matrix integrate_variational(const ScenarioSystem& sys, double t0, const Vector& xi,
                                    double t1, double step) {
  if (!sys.pert.is_linear()) {
    throw UnsupportedPerturbation("integrate_variational needs a linear-homogeneous perturbation");
  }
  if (xi.size() != sys.dim()) throw std::invalid_argument("integrate_variational: dimension mismatch");
  return integrate_variational(sys.A, *sys.pert.linear, t0, t1, step);
}

inline AdmissibilityReport check_admissibility(const ScenarioSystem& sys,
                                               const AdmissibilityOptions& opt = {}) {
  return check_admissibility(sys.cert, sys.pert, &sys.A, opt);
}

}  // namespace conjlab

#pragma once

#include "conjlab/scenarios.hpp"

#include <cmath>
#include <random>

namespace support {

inline constexpr unsigned kSeed = 20261015;

inline conjlab::Vector vec(double v) { return conjlab::scalar_vector(v); }

inline conjlab::Vector vec(std::initializer_list<double> vs) {
  conjlab::Vector out(static_cast<int>(vs.size()));
  int i = 0;
  for (double v : vs) out(i++) = v;
  return out;
}

/// x' = -x, f = 0.
inline conjlab::ScenarioSystem unperturbed_scalar() {
  conjlab::ScenarioSystem sys;
  sys.label = "unperturbed";
  sys.A = conjlab::constant_field(conjlab::scalar_matrix(-1.0));
  sys.cert = {1.0, 1.0};
  sys.pert = conjlab::zero_perturbation(1, 1.0);
  return sys;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace support

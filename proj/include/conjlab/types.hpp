#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace conjlab {

/// Largest state dimension supported. Vectors and matrices are stack-allocated
/// with a runtime size up to this bound.
inline constexpr int kMaxDim = 8;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

using ScalarFn = std::function<double(double)>;
using VectorField = std::function<Vector(double, const Vector&)>;
using VectorMap = std::function<Vector(const Vector&)>;

/// Any state component above this magnitude counts as divergence.
inline constexpr double kOverflowThreshold = 1e12;

inline Vector scalar_vector(double v) {
  Vector out(1);
  out(0) = v;
  return out;
}

inline Matrix scalar_matrix(double v) {
  Matrix out(1, 1);
  out(0, 0) = v;
  return out;
}

/// Spectral norm (largest singular value).
inline double op_norm(const Matrix& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(double last_valid_time, const std::string& what)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

class TailTooLarge : public Error {
 public:
  TailTooLarge(double required_window, const std::string& what)
      : Error(what), required_window_(required_window) {}
  double required_window() const { return required_window_; }

 private:
  double required_window_;
};

class WindowTooLarge : public Error {
 public:
  WindowTooLarge(double window, double reached_time, const std::string& what)
      : Error(what), window_(window), reached_time_(reached_time) {}
  double window() const { return window_; }
  double reached_time() const { return reached_time_; }

 private:
  double window_;
  double reached_time_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(double last_defect, const std::string& what)
      : Error(what), last_defect_(last_defect) {}
  double last_defect() const { return last_defect_; }

 private:
  double last_defect_;
};

class UnsupportedPerturbation : public Error {
  using Error::Error;
};

class NotContractive : public Error {
  using Error::Error;
};

class EmptyInput : public Error {
  using Error::Error;
};

class DegenerateFit : public Error {
  using Error::Error;
};

class NumericError : public Error {
  using Error::Error;
};

}  // namespace conjlab

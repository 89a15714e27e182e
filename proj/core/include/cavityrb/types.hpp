#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace cavityrb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Physical/geometric parameter pair: Rayleigh number and cavity height.
struct ParameterPoint {
  double rayleigh = 1.0e3;
  double height = 1.0;

  friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;
};

/// Axis-aligned parameter box D = [ra_min, ra_max] x [height_min, height_max].
struct ParameterBox {
  double ra_min = 1.0e3;
  double ra_max = 1.0e4;
  double height_min = 1.0;
  double height_max = 1.0;

  [[nodiscard]] bool contains(const ParameterPoint& mu, double rel_tol = 1e-12) const;
  [[nodiscard]] bool height_fixed() const { return height_max == height_min; }
  [[nodiscard]] bool rayleigh_fixed() const { return ra_max == ra_min; }
  /// Coordinates in [0,1]^2: log10 Ra and linear height, each normalized over the box.
  [[nodiscard]] Eigen::Vector2d scaled(const ParameterPoint& mu) const;
};

// Error hierarchy. Every numerical failure surfaces as one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArtifactError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, double last_increment)
      : NumericalError(what), last_increment_(last_increment) {}
  [[nodiscard]] double last_increment() const { return last_increment_; }

 private:
  double last_increment_;
};

class LinearSolveFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateSnapshot : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RedundantSnapshot : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GreedyStall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NewtonDivergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EigenSolveFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonPositiveBeta : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidBeta : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularInterpolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace cavityrb

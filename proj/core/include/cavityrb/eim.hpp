#pragma once

#include "cavityrb/types.hpp"

#include <functional>
#include <vector>

namespace cavityrb {

/// Empirical interpolation of a scalar field sampled at quadrature points.
///
/// basis.col(k) is q_k, normalized to 1 at magic point k and zero at the earlier
/// magic points, so interpolation(i, j) = q_j(x_i) is unit lower-triangular.
struct EIMApproximation {
  Matrix basis;                        // num_points x M
  std::vector<int> magic_points;       // quadrature point indices
  Matrix interpolation;                // M x M
  std::vector<double> training_errors;  // relative sup-norm error with 1..M terms

  [[nodiscard]] int size() const { return static_cast<int>(magic_points.size()); }
  /// Interpolation coefficients from the field values at the magic points.
  [[nodiscard]] Vector coefficients(const Vector& values_at_magic_points) const;
  /// Sum_k sigma_k q_k.
  [[nodiscard]] Vector expand(const Vector& sigma) const;
  /// Interpolant of a full field (only its values at the magic points are read).
  [[nodiscard]] Vector interpolate(const Vector& field) const;
  /// The first m terms; equal to what a build capped at m would produce.
  [[nodiscard]] EIMApproximation truncated(int m) const;
};

/// Solves the unit lower-triangular interpolation system.
Vector eim_coefficients(const EIMApproximation& eim, const Vector& values_at_magic_points);

/// Greedy build over precomputed fields (columns of `snapshots`). The error
/// measure is ||f - I f||_inf / ||f||_inf; ties go to the lowest index.
/// Throws InvalidArgument for an empty set or a nonpositive tolerance and
/// DegenerateSnapshot when the selected residual vanishes before tol is met.
EIMApproximation eim_build(const Matrix& snapshots, double tol, int max_m);

using FieldProvider = std::function<Vector(const ParameterPoint&)>;
EIMApproximation eim_build(const FieldProvider& provider, const std::vector<ParameterPoint>& training,
                           double tol, int max_m);

}  // namespace cavityrb

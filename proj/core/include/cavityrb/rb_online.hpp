#pragma once

#include "cavityrb/rb_offline.hpp"

#include <vector>

namespace cavityrb {

/// Everything the online stage needs. Immutable once built; rb_solve is reentrant.
struct ReducedModel {
  ParameterBox box;
  PhysicalConstants constants;
  int n_h = 0;
  ReducedBasisSpace basis;
  ReducedOperatorSet operators;
  ResidualRiesz riesz;
  EIMApproximation eim;
  /// Reduced coordinates [a; b; c] of each selected snapshot (initial guesses).
  std::vector<Vector> snapshot_coordinates;

  [[nodiscard]] int size() const { return basis.size(); }
};

struct ReducedSolution {
  ParameterPoint parameter;
  Vector velocity;     // 2N
  Vector pressure;     // N
  Vector temperature;  // N, fluctuation coefficients
  Vector sigma;        // EIM coefficients at the returned iterate
  int newton_iterations = 0;
  double residual_norm = 0.0;  // Euclidean, relative to the zero-state residual
  std::vector<double> history;  // relative residual norm per iteration

  [[nodiscard]] Vector coordinates() const;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  /// Consecutive residual increases that count as divergence.
  int max_increases = 5;
};

/// Reduced Newton solve. EIM coefficients are frozen within each iteration.
/// `initial` (optional) overrides the nearest-snapshot initial guess. Falls back
/// to parameter continuation from the nearest snapshot before giving up with
/// NewtonDivergence.
ReducedSolution rb_solve(const ParameterPoint& mu, const ReducedModel& model, const NewtonOptions& options = {},
                         const Vector* initial = nullptr);

/// Reduced residual r(x) and Jacobian at coordinates x with frozen sigma.
struct ReducedSystem {
  Vector residual;
  Matrix jacobian;
};
ReducedSystem reduced_system(const ReducedModel& model, const ParameterPoint& mu, const Vector& x,
                             const Vector& sigma);
/// EIM coefficients of the eddy viscosity of the reduced velocity a.
Vector online_sigma(const ReducedModel& model, const ParameterPoint& mu, const Vector& velocity_coefficients);

/// Full-order fields; temperature is the fluctuation (the lift is implied).
FESolution reconstruct(const ReducedSolution& reduced, const ReducedBasisSpace& space);
FESolution reconstruct(const Vector& coordinates, const ParameterPoint& mu, const ReducedBasisSpace& space);
/// Reduced coordinates of a full-order state (X-orthogonal projection).
Vector project_solution(const FESolution& s, const ReducedBasisSpace& space, const FullOrderModel& model);

/// epsilon_N from the stored residual factors; cost independent of the mesh.
double residual_dual_norm(const ReducedSolution& reduced, const ReducedModel& model);
/// Same quantity by a full-order Riesz solve; `use_eim` selects the EIM eddy
/// viscosity (matches the online value) or the exact one.
double residual_dual_norm_direct(const ReducedSolution& reduced, const ReducedModel& model,
                                 const FullOrderModel& fom, bool use_eim);

}  // namespace cavityrb

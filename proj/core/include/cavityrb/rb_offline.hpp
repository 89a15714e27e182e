#pragma once

#include "cavityrb/eim.hpp"
#include "cavityrb/fom.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace cavityrb {

/// Reduced spaces stored as full-order coefficient columns. Velocity columns
/// alternate snapshot / supremizer; temperature columns are lift fluctuations.
struct ReducedBasisSpace {
  Matrix velocity;     // 2 n2 x 2N
  Matrix temperature;  // n2 x N
  Matrix pressure;     // n1 x N
  std::vector<ParameterPoint> parameters;

  [[nodiscard]] int size() const { return static_cast<int>(pressure.cols()); }
};

/// Projected blocks, convective tensors and EIM kernel stacks. Slices are indexed
/// [advecting basis or EIM term](test, trial); no parameter prefactors included.
struct ReducedOperatorSet {
  Matrix velocity_diffusion_x, velocity_diffusion_y;        // 2N x 2N
  Matrix divergence_x, divergence_y;                        // N x 2N
  Matrix buoyancy;                                          // 2N x N
  Vector buoyancy_lift;                                     // 2N
  Matrix temperature_diffusion_x, temperature_diffusion_y;  // N x N
  Vector temperature_diffusion_lift_x, temperature_diffusion_lift_y;  // N
  Matrix lift_convection;                                   // N x 2N
  std::vector<Matrix> convection_velocity_x, convection_velocity_y;        // 2N slices of 2N x 2N
  std::vector<Matrix> convection_temperature_x, convection_temperature_y;  // 2N slices of N x N
  std::vector<Matrix> eddy_velocity_x, eddy_velocity_y;                    // M slices of 2N x 2N
  std::vector<Matrix> eddy_temperature_x, eddy_temperature_y;              // M slices of N x N
  /// Fluctuation gradients (d_x u1, d_y u1, d_x u2, d_y u2) of each velocity basis
  /// function at the EIM magic points: 4 matrices of size M x 2N.
  std::array<Matrix, 4> magic_gradients;
};

/// Parameter-independent pieces of the full-order residual at a reduced state.
enum class ResidualTerm : std::uint8_t {
  velocity_diffusion_x,
  velocity_diffusion_y,
  pressure_gradient_x,
  pressure_gradient_y,
  buoyancy,
  buoyancy_lift,
  convection_velocity_x,
  convection_velocity_y,
  eddy_velocity_x,
  eddy_velocity_y,
  divergence_x,
  divergence_y,
  temperature_diffusion_x,
  temperature_diffusion_y,
  temperature_diffusion_lift_x,
  temperature_diffusion_lift_y,
  convection_temperature_x,
  convection_temperature_y,
  lift_convection,
  eddy_temperature_x,
  eddy_temperature_y,
};

struct ResidualComponent {
  ResidualTerm term;
  int first = -1;
  int second = -1;
};

/// Residual dual norm factors: for each equation block, columns L^{-1} P f_k of
/// the whitened component functionals, so that eps^2 = sum ||R c||^2 over blocks.
struct ResidualRiesz {
  std::array<std::vector<ResidualComponent>, 3> components;  // momentum, continuity, energy
  std::array<Matrix, 3> factors;
  /// Replaces each factor by the triangular factor of its QR decomposition
  /// (same column norms of R c, at most min(rows, cols) rows).
  void compress();
};

/// Modified Gram-Schmidt (two passes) of `v` against the columns of `basis` in the
/// inner product `gram`. Throws RedundantSnapshot when the remainder is below
/// 1e-10 of the original norm.
Vector orthonormalize_against(const Matrix& basis, const Vector& v, const SparseMatrix& gram);
/// Orthonormalizes the columns in order.
Matrix orthonormalize(const Matrix& basis, const SparseMatrix& gram);

/// Builds and incrementally updates the reduced operators and residual factors.
class ReducedProjector {
 public:
  ReducedProjector(const FullOrderModel& model, const EIMApproximation& eim);
  /// Projects a complete orthonormal space in one pass.
  ReducedProjector(const FullOrderModel& model, const EIMApproximation& eim, const ReducedBasisSpace& space);

  /// Adds the snapshot, its supremizer at the snapshot height, and updates every
  /// reduced quantity for the new indices only.
  void enrich(const FESolution& snapshot);
  /// Adds pre-orthonormalized basis columns (used when reloading or testing).
  void append(const Vector& velocity_snapshot, const Vector& velocity_supremizer, const Vector& pressure,
              const Vector& temperature, const ParameterPoint& mu);

  [[nodiscard]] const ReducedBasisSpace& space() const { return space_; }
  [[nodiscard]] const ReducedOperatorSet& operators() const { return ops_; }
  [[nodiscard]] const ResidualRiesz& riesz() const { return riesz_; }
  [[nodiscard]] const SparseMatrix& velocity_gram() const { return vel_gram_; }
  [[nodiscard]] const SparseMatrix& temperature_gram() const { return temp_gram_; }
  [[nodiscard]] const SparseMatrix& pressure_gram() const { return pres_gram_; }

 private:
  void add_columns(const Vector& velocity_snapshot, const Vector& velocity_supremizer, const Vector& pressure,
                   const Vector& temperature, const ParameterPoint& mu);
  void update(int old_u, int old_n);
  void update_operators(int old_u, int old_n);
  void update_riesz(int old_u, int old_n);
  [[nodiscard]] Vector component_functional(int block, const ResidualComponent& c) const;

  const FullOrderModel* model_;
  const EIMApproximation* eim_;
  ReducedBasisSpace space_;
  ReducedOperatorSet ops_;
  ResidualRiesz riesz_;
  SparseMatrix vel_gram_, temp_gram_, pres_gram_;
  // Basis values at quadrature points (columns per basis function).
  Matrix u1_, u2_, u1x_, u1y_, u2x_, u2y_, f1x_, f1y_, f2x_, f2y_;
  Matrix t_, tx_, ty_, tfx_, tfy_;
  Vector lift_x_, lift_y_;
};

/// From-scratch projection of every operator onto an orthonormal space.
ReducedOperatorSet project_operators(const ReducedBasisSpace& space, const FullOrderModel& model,
                                     const EIMApproximation& eim);

}  // namespace cavityrb

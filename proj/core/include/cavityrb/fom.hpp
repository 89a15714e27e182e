#pragma once

#include "cavityrb/assembly.hpp"
#include "cavityrb/fe_space.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace cavityrb {

struct FomConfig {
  double dt = 0.01;
  double steady_tol = 1e-10;
  int max_steps = 20000;
  /// Relative residual accepted from each linear solve.
  double linear_solver_tol = 1e-10;
};

/// One pseudo-time step of the full-order solver.
struct FomStep {
  int step = 0;
  double increment = 0.0;
  double wall_seconds = 0.0;
};

/// Ordering of the constrained unknowns: [free velocity | pressure | free temperature].
/// The zero-mean pressure condition is not part of this vector; solvers append one
/// Lagrange multiplier when needed.
class SystemLayout {
 public:
  explicit SystemLayout(const DofLayout& layout);

  [[nodiscard]] int velocity_size() const { return nu_; }
  [[nodiscard]] int pressure_size() const { return np_; }
  [[nodiscard]] int temperature_size() const { return nt_; }
  [[nodiscard]] int size() const { return nu_ + np_ + nt_; }
  [[nodiscard]] int pressure_offset() const { return nu_; }
  [[nodiscard]] int temperature_offset() const { return nu_ + np_; }

  [[nodiscard]] Vector pack(const FESolution& s) const;
  [[nodiscard]] FESolution unpack(const Vector& x, const ParameterPoint& mu) const;
  /// Maps full vectors of each field to their system block (restriction to free dofs).
  [[nodiscard]] Vector restrict_velocity(const Vector& full) const;
  [[nodiscard]] Vector restrict_temperature(const Vector& full) const;
  [[nodiscard]] Vector extend_velocity(const Vector& free) const;
  [[nodiscard]] Vector extend_temperature(const Vector& free) const;

  [[nodiscard]] const DofLayout& dofs() const { return *layout_; }

 private:
  const DofLayout* layout_;
  int nu_;
  int np_;
  int nt_;
};

/// Reference-domain spaces, affine blocks and X-inner-product solvers shared by
/// every full-order computation.
class FullOrderModel {
 public:
  FullOrderModel(const UniformMesh& mesh, const PhysicalConstants& constants);
  FullOrderModel(const FullOrderModel&) = delete;
  FullOrderModel& operator=(const FullOrderModel&) = delete;

  [[nodiscard]] const FESpace& space() const { return space_; }
  [[nodiscard]] const AffineOperatorSet& affine() const { return affine_; }
  [[nodiscard]] const PhysicalConstants& constants() const { return constants_; }
  [[nodiscard]] const SystemLayout& system() const { return system_; }

  /// Steady residual of the reference problem on the constrained rows. `nu`
  /// replaces the eddy viscosity at quadrature points when given.
  [[nodiscard]] Vector residual(const FESolution& s, const Vector* nu = nullptr) const;
  /// Gateaux derivative of the residual at s (eddy-diffusivity derivative excluded).
  [[nodiscard]] SparseMatrix jacobian(const FESolution& s) const;

  /// Block-diagonal X Gram matrix on the system vector.
  [[nodiscard]] const SparseMatrix& x_matrix() const { return x_; }
  /// Riesz representer in X of a functional on the system rows. The pressure part
  /// is returned with zero mean.
  [[nodiscard]] Vector riesz(const Vector& functional) const;
  /// Dual norm of a functional: X-norm of its Riesz representer.
  [[nodiscard]] double dual_norm(const Vector& functional) const;
  [[nodiscard]] double x_norm(const Vector& system_vector) const;
  [[nodiscard]] double x_inner(const Vector& a, const Vector& b) const;
  /// Pressure mean weights in system ordering (zero outside the pressure block).
  [[nodiscard]] Vector mean_constraint() const;

  /// L^{-1} P f for the Cholesky factor P X P^T = L L^T of one X block, so that
  /// the Euclidean norm of the result is the dual norm of f on that block.
  [[nodiscard]] Vector whiten_velocity(const Vector& f) const;
  [[nodiscard]] Vector whiten_pressure(const Vector& f) const;
  [[nodiscard]] Vector whiten_temperature(const Vector& f) const;

  /// Velocity-block Riesz solve on the free velocity dofs.
  [[nodiscard]] Vector solve_velocity_laplacian(const Vector& rhs_free) const;

 private:
  FESpace space_;
  AffineOperatorSet affine_;
  PhysicalConstants constants_;
  SystemLayout system_;
  SparseMatrix x_;
  SparseMatrix velocity_x_;
  SparseMatrix temperature_x_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> velocity_chol_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> temperature_chol_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> pressure_chol_;
};

/// Steady state by semi-implicit pseudo-time marching from the conduction state.
/// Throws NonConvergence when max_steps is reached, LinearSolveFailure when a step
/// matrix cannot be factorized.
FESolution solve_fom(const FullOrderModel& model, const ParameterPoint& mu, const FomConfig& config,
                     std::vector<FomStep>* log = nullptr);

/// Velocity T q with (grad T q, grad v) = -mu_g int q d_x v1 - int q d_y v2 for all v.
Vector solve_supremizer(const FullOrderModel& model, const Vector& pressure, double height);

/// Selects rows/columns of a full matrix through index maps (negative entries drop).
void scatter_block(std::vector<Triplet>& out, const SparseMatrix& block, double coefficient,
                   const std::vector<int>* row_map, int row_offset, const std::vector<int>* col_map,
                   int col_offset);

}  // namespace cavityrb

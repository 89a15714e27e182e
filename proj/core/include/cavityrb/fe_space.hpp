#pragma once

#include "cavityrb/mesh.hpp"
#include "cavityrb/types.hpp"

#include <array>
#include <vector>

namespace cavityrb {

/// Symmetric 6-point rule on triangles, exact for polynomials of degree 4.
/// Barycentric points and weights normalized to sum to one.
struct TriangleQuadrature {
  static constexpr int kPoints = 6;
  static const std::array<std::array<double, 3>, kPoints>& points();
  static const std::array<double, kPoints>& weights();
};

/// P2 velocity / P2 temperature / P1 pressure numbering on a UniformMesh.
///
/// P2 nodes are the points of the (2 N_h + 1)^2 grid at spacing h/2; node (I, J)
/// has index J * (2 N_h + 1) + I. Vertices are the nodes with I and J even.
/// Velocity vectors are stored as [u1; u2], each block of size num_p2().
class DofLayout {
 public:
  explicit DofLayout(const UniformMesh& mesh);

  [[nodiscard]] int num_p2() const { return np2_; }
  [[nodiscard]] int num_p1() const { return np1_; }
  [[nodiscard]] int velocity_size() const { return 2 * np2_; }
  [[nodiscard]] int temperature_size() const { return np2_; }
  [[nodiscard]] int pressure_size() const { return np1_; }
  [[nodiscard]] int fine_side() const { return side_; }

  /// Local P2 nodes ordered [v0, v1, v2, m01, m12, m20].
  [[nodiscard]] const std::array<int, 6>& p2_nodes(int triangle) const { return p2_[triangle]; }
  [[nodiscard]] const std::array<int, 3>& p1_nodes(int triangle) const { return p1_[triangle]; }
  [[nodiscard]] Eigen::Vector2d p2_coordinate(int node) const;
  /// P1 index of a P2 node that is a mesh vertex, or -1.
  [[nodiscard]] int p1_of_p2(int node) const;

  /// Indices into the velocity vector [u1; u2] fixed by the no-slip condition.
  [[nodiscard]] const std::vector<int>& velocity_dirichlet() const { return vel_dirichlet_; }
  /// Temperature nodes on the left and right walls.
  [[nodiscard]] const std::vector<int>& temperature_dirichlet() const { return temp_dirichlet_; }
  [[nodiscard]] const std::vector<int>& velocity_free() const { return vel_free_; }
  [[nodiscard]] const std::vector<int>& temperature_free() const { return temp_free_; }
  /// Position of a velocity dof in velocity_free(), or -1 when constrained.
  [[nodiscard]] int velocity_free_index(int dof) const { return vel_free_index_[dof]; }
  [[nodiscard]] int temperature_free_index(int dof) const { return temp_free_index_[dof]; }
  [[nodiscard]] const std::vector<int>& velocity_free_map() const { return vel_free_index_; }
  [[nodiscard]] const std::vector<int>& temperature_free_map() const { return temp_free_index_; }

 private:
  int np2_ = 0;
  int np1_ = 0;
  int side_ = 0;
  std::vector<std::array<int, 6>> p2_;
  std::vector<std::array<int, 3>> p1_;
  std::vector<int> vel_dirichlet_;
  std::vector<int> temp_dirichlet_;
  std::vector<int> vel_free_;
  std::vector<int> temp_free_;
  std::vector<int> vel_free_index_;
  std::vector<int> temp_free_index_;
};

/// Values and gradients of a scalar field at every quadrature point of the mesh.
/// Quadrature point q of triangle t has global index 6 t + q.
struct QuadratureValues {
  Vector value;
  Vector dx;
  Vector dy;
};

/// Per-element tabulation of P2/P1 shape functions on the (possibly mapped) mesh.
struct ElementTabulation {
  double area = 0.0;
  // [q](i, d): derivative d of P2 shape function i at quadrature point q.
  std::array<Eigen::Matrix<double, 6, 2>, 6> grad;
  // Same for the VMS fluctuation (Id - Pi_h) of each P2 shape function.
  std::array<Eigen::Matrix<double, 6, 2>, 6> fluct_grad;
  // Gradients of P1 shape functions (constant on the element).
  Eigen::Matrix<double, 3, 2> p1_grad;
};

/// Finite element spaces, quadrature cache and the parameter-independent
/// matrices needed for norms. `geometry_height` maps the mesh before tabulation;
/// the reference configuration uses 1.
class FESpace {
 public:
  explicit FESpace(const UniformMesh& mesh, double geometry_height = 1.0);

  [[nodiscard]] const UniformMesh& mesh() const { return mesh_; }
  [[nodiscard]] const DofLayout& layout() const { return layout_; }
  [[nodiscard]] double geometry_height() const { return height_; }
  [[nodiscard]] int num_quadrature_points() const { return 6 * mesh_.num_triangles(); }
  [[nodiscard]] const ElementTabulation& element(int triangle) const { return tab_[triangle]; }
  /// Shape function values at the quadrature points: (q, i).
  [[nodiscard]] static const Eigen::Matrix<double, 6, 6>& p2_values();
  [[nodiscard]] static const Eigen::Matrix<double, 6, 3>& p1_values();
  /// Global quadrature weights (rule weight times element area).
  [[nodiscard]] const Vector& quadrature_weights() const { return weights_; }
  [[nodiscard]] Eigen::Vector2d quadrature_point(int q) const;

  [[nodiscard]] QuadratureValues evaluate(const Vector& p2) const;
  /// Gradients of (Id - Pi_h) applied to the P2 field, at all quadrature points.
  [[nodiscard]] QuadratureValues evaluate_fluctuation(const Vector& p2) const;
  [[nodiscard]] Vector evaluate_p1(const Vector& p1) const;

  /// Full (unconstrained) scalar P2 matrices.
  [[nodiscard]] const SparseMatrix& stiffness_xx() const { return kxx_; }
  [[nodiscard]] const SparseMatrix& stiffness_yy() const { return kyy_; }
  [[nodiscard]] const SparseMatrix& stiffness() const { return k_; }
  [[nodiscard]] const SparseMatrix& p2_mass() const { return m2_; }
  [[nodiscard]] const SparseMatrix& p1_mass() const { return m1_; }
  /// Integrals of the P1 shape functions; m^T p = 0 is the zero-mean constraint.
  [[nodiscard]] const Vector& pressure_mean_weights() const { return mean_; }

  /// P2 interpolant of a scalar function.
  template <typename F>
  [[nodiscard]] Vector interpolate_p2(F&& f) const {
    Vector out(layout_.num_p2());
    for (int n = 0; n < layout_.num_p2(); ++n) {
      const auto p = layout_.p2_coordinate(n);
      out[n] = f(p.x(), p.y());
    }
    return out;
  }
  template <typename F>
  [[nodiscard]] Vector interpolate_p1(F&& f) const {
    Vector out(layout_.num_p1());
    for (int n = 0; n < layout_.num_p1(); ++n) {
      const auto& p = mesh_.vertices()[n];
      out[n] = f(p.x(), p.y());
    }
    return out;
  }

 private:
  UniformMesh mesh_;
  DofLayout layout_;
  double height_;
  std::vector<ElementTabulation> tab_;
  Vector weights_;
  SparseMatrix kxx_, kyy_, k_, m2_, m1_;
  Vector mean_;
};

/// Full-order state. Temperature holds the lifted fluctuation theta - theta_g.
struct FESolution {
  ParameterPoint parameter;
  Vector velocity;     // [u1; u2]
  Vector temperature;  // fluctuation, zero on the left/right walls
  Vector pressure;     // zero mean
};

FESolution zero_solution(const FESpace& space, const ParameterPoint& mu = {});

/// sqrt(|grad u|^2 + |grad theta|^2 + |p|^2) on the reference domain.
double x_norm(const FESpace& space, const FESolution& s);

/// Squared X-norm contributions of the three components.
struct XNormParts {
  double velocity = 0.0;
  double temperature = 0.0;
  double pressure = 0.0;
};
XNormParts x_norm_parts(const FESpace& space, const FESolution& s);

/// Pi_h: nodal interpolation onto P1 re-expressed in P2 (midpoints get edge averages).
Vector vms_project(const DofLayout& layout, const Vector& p2);
/// Pi_h^* = Id - Pi_h.
Vector vms_fluctuation(const DofLayout& layout, const Vector& p2);
/// Component-wise Pi_h on a velocity vector [u1; u2].
Vector vms_project_velocity(const DofLayout& layout, const Vector& velocity);

/// Lift theta_g = 1 - x (hot left wall at 1, cold right wall at 0).
double lift_function(double x, double y);
Vector lift_vector(const FESpace& space);
/// raw -> raw - theta_g; rejects fields violating the wall values by more than 1e-10.
Vector apply_lift(const FESpace& space, const Vector& raw_temperature);
/// fluctuation -> fluctuation + theta_g.
Vector remove_lift(const FESpace& space, const Vector& fluctuation);

/// Removes the mass-weighted mean from a P1 pressure vector.
Vector zero_mean(const FESpace& space, const Vector& pressure);

/// Legacy VTK export of a solution on the original domain (vertex values).
void write_vtk_solution(std::ostream& out, const FESpace& space, const FESolution& s);

}  // namespace cavityrb

#pragma once

#include "cavityrb/fe_space.hpp"
#include "cavityrb/types.hpp"

namespace cavityrb {

/// Model constants that are not parameters: Prandtl number and Smagorinsky constant.
struct PhysicalConstants {
  double prandtl = 0.71;
  double smagorinsky = 0.1;
};

/// Pointwise eddy viscosity of the mapped mesh:
/// C_S^2 (mu_g^2 + 1) / N_h^2 * sqrt(g11^2 + g12^2 / mu_g^2 + g21^2 + g22^2 / mu_g^2),
/// where gcd = d_d u_c on the reference domain.
double eddy_viscosity(double dx_u1, double dy_u1, double dx_u2, double dy_u2, double height,
                      double c_s, int n_h);

/// Eddy viscosity of the velocity fluctuation (Id - Pi_h) u at every quadrature point.
Vector eddy_viscosity_field(const FESpace& space, const Vector& velocity, double height, double c_s);

/// Parameter-independent linear blocks on the reference mesh. All blocks act on
/// full (unconstrained) vectors; Dirichlet rows and columns are removed by the solver.
struct AffineOperatorSet {
  SparseMatrix velocity_diffusion_x;     // 2n2 x 2n2: int d_x u . d_x v
  SparseMatrix velocity_diffusion_y;     // 2n2 x 2n2: int d_y u . d_y v
  SparseMatrix divergence_x;             // n1 x 2n2: -int q d_x v1
  SparseMatrix divergence_y;             // n1 x 2n2: -int q d_y v2
  SparseMatrix buoyancy;                 // 2n2 x n2: -int theta v2
  SparseMatrix temperature_diffusion_x;  // n2 x n2: int d_x theta d_x s
  SparseMatrix temperature_diffusion_y;  // n2 x n2: int d_y theta d_y s
  SparseMatrix lift_convection;          // n2 x 2n2: int u1 d_x(theta_g) s
  SparseMatrix velocity_mass;            // 2n2 x 2n2
  Vector lift;                           // theta_g interpolant
};

enum class AffineTerm {
  velocity_diffusion_x,
  velocity_diffusion_y,
  divergence_x,
  divergence_y,
  buoyancy,
  temperature_diffusion_x,
  temperature_diffusion_y,
  lift_convection,
  convection_x,
  convection_y,
  eddy_velocity_x,
  eddy_velocity_y,
  eddy_temperature_x,
  eddy_temperature_y,
};

/// Scalar coefficient multiplying the parameter-independent term at mu.
double theta_coefficient(AffineTerm term, const ParameterPoint& mu, double prandtl);

/// Throws InvalidArgument when the velocity layout has no free dofs.
AffineOperatorSet assemble_affine(const FESpace& reference);

/// Physical linear forms assembled directly on the mapped cavity, with all
/// constants included. Each member corresponds to one affine term.
struct OriginalDomainOperators {
  SparseMatrix velocity_diffusion_x;
  SparseMatrix velocity_diffusion_y;
  SparseMatrix divergence_x;
  SparseMatrix divergence_y;
  SparseMatrix buoyancy;
  SparseMatrix temperature_diffusion_x;
  SparseMatrix temperature_diffusion_y;
  SparseMatrix lift_convection;
};

OriginalDomainOperators assemble_on_original(const UniformMesh& mesh, const ParameterPoint& mu,
                                             double prandtl);
/// theta_q(mu) * Block_q for every linear block, for comparison with the direct assembly.
OriginalDomainOperators combine_affine(const AffineOperatorSet& set, const ParameterPoint& mu,
                                       double prandtl);

// Scalar P2 kernels with quadrature-point coefficients. Results are n2 x n2 unless noted.

/// int (cx a1 d_x phi_j + cy a2 d_y phi_j) phi_i
SparseMatrix assemble_convection(const FESpace& space, const Vector& a1, const Vector& a2, double cx,
                                 double cy);
/// int nu (cx d_x Pi* phi_j d_x Pi* phi_i + cy d_y Pi* phi_j d_y Pi* phi_i)
SparseMatrix assemble_fluctuation_diffusion(const FESpace& space, const Vector& nu, double cx,
                                            double cy);
/// n2 x 2n2: int (cx w1 d_x f + cy w2 d_y f) phi_i for w = phi_j in component d.
SparseMatrix assemble_advected_gradient(const FESpace& space, const QuadratureValues& f, double cx,
                                        double cy);
/// 2n2 x 2n2 derivative of the eddy-viscosity factor in a'_Su(w; u, v) with respect to w,
/// evaluated at w = u = velocity. Includes the mu_g prefactors.
SparseMatrix assemble_eddy_derivative(const FESpace& space, const Vector& velocity, double height,
                                      double c_s);

/// sum_q g_q phi_i(x_q) for every P2 node; g already carries the quadrature weights.
Vector integrate_against_p2(const FESpace& space, const Vector& g);
/// sum_q (gx_q d_x Pi* phi_i + gy_q d_y Pi* phi_i) for every P2 node.
Vector integrate_against_fluctuation_gradient(const FESpace& space, const Vector& gx, const Vector& gy);

/// Block-diagonal [S 0; 0 S] for a scalar P2 matrix.
SparseMatrix block_diagonal(const SparseMatrix& scalar);

/// Nonlinear form contributions as full vectors, mu prefactors included.
struct NonlinearContributions {
  Vector convection_velocity;   // c_u,x + c_u,y (w = u)
  Vector convection_temperature;  // c_theta,x + c_theta,y on the given temperature vector
  Vector eddy_velocity;          // a'_Su,x + a'_Su,y
  Vector eddy_temperature;       // a'_Stheta,x + a'_Stheta,y
};

/// `nu` overrides the eddy viscosity at quadrature points (e.g. an EIM interpolant).
NonlinearContributions evaluate_nonlinear_forms(const FESpace& space, const Vector& velocity,
                                                const Vector& temperature, const ParameterPoint& mu,
                                                const PhysicalConstants& constants,
                                                const Vector* nu = nullptr);

}  // namespace cavityrb

#pragma once

#include "cavityrb/fom.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace cavityrb {

/// Mesh-dependent constants of the Lipschitz bound, all measured on the reference mesh.
struct CertificationConstants {
  double sobolev_velocity = 0.0;     // sup ||v||_L4 / ||grad v||_L2, vector fields
  double sobolev_temperature = 0.0;  // same on the temperature space
  double projector_stability = 0.0;  // sup ||grad Pi* v|| / ||grad v||
  double poincare = 0.0;             // sup ||v|| / ||grad v|| (diagnostic)
  double inverse = 0.0;              // max over global and patch-local random fields of h ||grad v||_inf / ||grad v||_L2
  double smagorinsky = 0.1;
  int n_h = 0;
  /// Largest ||grad u||_inf and ||grad theta||_inf over the snapshot set. Stored
  /// for reference only: the bound term they would enter is omitted.
  double sup_velocity_gradient = 0.0;
  double sup_temperature_gradient = 0.0;
};

struct SobolevOptions {
  double tol = 1e-8;
  int max_iter = 2000;
};

/// Fixed-point iteration v <- K^{-1} N(v), N_i = int |v|^2 v . phi_i, normalized in
/// the gradient norm. Returns the L4 norm at the fixed point. Throws NonConvergence.
double sobolev_constant(const FESpace& space, bool vector_valued, const SobolevOptions& options = {});

struct LanczosOptions {
  double tol = 1e-9;
  int max_iter = 400;
  std::uint64_t seed = 7;
};

/// Largest eigenvalue of an operator that is self-adjoint in the inner product
/// x^T B y, by Lanczos with full reorthogonalization. `project` (optional) maps
/// the start vector into the admissible subspace. Throws EigenSolveFailure.
double lanczos_largest(const std::function<Vector(const Vector&)>& op, const SparseMatrix& gram, int size,
                       const LanczosOptions& options = {},
                       const std::function<Vector(const Vector&)>& project = nullptr);

/// Computes every entry of CertificationConstants except the snapshot sup bounds.
CertificationConstants compute_constants(const FullOrderModel& model, int inverse_samples = 100,
                                         std::uint64_t seed = 1);

/// Largest ||grad u||_inf and ||grad theta||_inf of one state at quadrature points.
std::pair<double, double> gradient_sup_norms(const FESpace& space, const FESolution& s);

/// Lipschitz constant of the derivative as a function of the height:
/// max{1,g}(2 C_u^2 + 2 C_u C_theta) + max{g,1/g}(3 C_S h C + 2 C_S^2 h C_f^3),
/// h = sqrt(g^2 + 1) / N_h.
double lipschitz_rho(double height, const CertificationConstants& constants);

/// Inf-sup (and optionally continuity) constants of the full-order derivative at a state.
struct InfSupResult {
  double beta = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
};
/// Throws NonPositiveBeta when the derivative is singular, EigenSolveFailure when
/// Lanczos does not converge.
InfSupResult beta_exact(const FullOrderModel& model, const FESolution& state, bool with_gamma = false,
                        const LanczosOptions& options = {});

/// Thin-plate spline interpolant of log beta with a linear tail on the scaled
/// parameters, so the surrogate stays positive. Directions in which the box is
/// degenerate are dropped.
class BetaSurrogate {
 public:
  BetaSurrogate() = default;
  /// Throws InvalidArgument for fewer than 4 nodes or non-positive values, SingularInterpolation for
  /// coincident nodes or a singular system.
  BetaSurrogate(const ParameterBox& box, std::vector<ParameterPoint> nodes, std::vector<double> values);

  [[nodiscard]] double operator()(const ParameterPoint& mu) const;
  [[nodiscard]] bool empty() const { return nodes_.empty(); }
  /// Max relative leave-one-out error over the nodes.
  [[nodiscard]] double leave_one_out_error() const;

  [[nodiscard]] const ParameterBox& box() const { return box_; }
  [[nodiscard]] const std::vector<ParameterPoint>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] const Vector& weights() const { return weights_; }

 private:
  [[nodiscard]] Eigen::VectorXd coordinates(const ParameterPoint& mu) const;

  ParameterBox box_;
  std::vector<ParameterPoint> nodes_;
  std::vector<double> values_;
  std::vector<int> active_;
  Vector weights_;  // kernel weights followed by the polynomial coefficients
};

struct ErrorCertificate {
  double epsilon = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double tau = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
  /// False when beta came from the surrogate rather than an eigen solve.
  bool beta_certified = true;
  double gamma = std::numeric_limits<double>::quiet_NaN();

  /// Delta when defined, tau otherwise.
  [[nodiscard]] double indicator() const { return defined ? delta : tau; }
};

/// tau = 4 eps rho / beta^2; delta = beta / (2 rho) (1 - sqrt(1 - tau)) when tau <= 1.
/// Throws InvalidBeta when beta <= 0 and InvalidArgument for rho <= 0 or eps < 0.
ErrorCertificate certify(double epsilon, double beta, double rho, bool beta_certified = true);

struct BoundCheck {
  double true_error = 0.0;
  bool bound_holds = false;
  double effectivity = std::numeric_limits<double>::quiet_NaN();
  /// 2 gamma / beta + tau when gamma is available.
  double effectivity_cap = std::numeric_limits<double>::quiet_NaN();
};

/// Compares the certificate with the X-norm distance between two states.
BoundCheck check_error_bound(const FESpace& space, const FESolution& reduced, const FESolution& truth,
                             const ErrorCertificate& certificate);

}  // namespace cavityrb

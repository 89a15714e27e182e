#include "cavityrb/assembly.hpp"
#include "cavityrb/fom.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cavityrb;
using cavityrb::testing::random_state;
using cavityrb::testing::random_vector;
using cavityrb::testing::relative_frobenius;

namespace {

const FESpace& space8() {
  static const FESpace s(build_uniform_mesh(8));
  return s;
}

}  // namespace

TEST(EddyViscosity, HandValues) {
  EXPECT_EQ(eddy_viscosity(0, 0, 0, 0, 1.0, 0.1, 50), 0.0);
  EXPECT_NEAR(eddy_viscosity(1, 0, 0, 0, 1.0, 0.1, 50), 8.0e-6, 1e-20);
  // Vertical derivatives are divided by the height inside the norm.
  EXPECT_NEAR(eddy_viscosity(0, 2, 0, 0, 2.0, 0.1, 10), 0.01 * 5.0 / 100.0, 1e-17);
}

TEST(EddyViscosity, IsPositivelyHomogeneous) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    const double a = n(rng), b = n(rng), c = n(rng), d = n(rng);
    const double lambda = std::exp(n(rng));
    const double g = 0.5 + std::abs(n(rng));
    EXPECT_NEAR(eddy_viscosity(lambda * a, lambda * b, lambda * c, lambda * d, g, 0.1, 16),
                lambda * eddy_viscosity(a, b, c, d, g, 0.1, 16), 1e-15 * lambda);
  }
}

TEST(EddyViscosity, FieldIsNonNegativeAndVanishesOnP1Velocities) {
  std::mt19937_64 rng(4);
  const auto& s = space8();
  for (int trial = 0; trial < 5; ++trial) {
    const FESolution r = random_state(s, rng);
    EXPECT_GE(eddy_viscosity_field(s, r.velocity, 1.3, 0.1).minCoeff(), 0.0);
    const Vector p1 = vms_project_velocity(s.layout(), r.velocity);
    EXPECT_LT(eddy_viscosity_field(s, p1, 1.3, 0.1).lpNorm<Eigen::Infinity>(), 1e-13);
  }
}

TEST(ThetaCoefficients, MatchTheReferenceScalings) {
  const ParameterPoint mu{2000.0, 2.0};
  const double pr = 0.71;
  EXPECT_DOUBLE_EQ(theta_coefficient(AffineTerm::velocity_diffusion_x, mu, pr), pr * 2.0);
  EXPECT_DOUBLE_EQ(theta_coefficient(AffineTerm::velocity_diffusion_y, mu, pr), pr / 2.0);
  EXPECT_DOUBLE_EQ(theta_coefficient(AffineTerm::buoyancy, mu, pr), pr * 2000.0 * 2.0);
  EXPECT_DOUBLE_EQ(theta_coefficient(AffineTerm::temperature_diffusion_y, mu, pr), 0.5);
  EXPECT_DOUBLE_EQ(theta_coefficient(AffineTerm::eddy_temperature_x, mu, pr), 2.0 / pr);
  EXPECT_DOUBLE_EQ(theta_coefficient(AffineTerm::eddy_temperature_y, mu, pr), 1.0 / (pr * 2.0));
}

class AffineOracle : public ::testing::TestWithParam<double> {};

TEST_P(AffineOracle, WeightedBlocksMatchDirectAssembly) {
  const double g = GetParam();
  const auto mesh = build_uniform_mesh(8);
  const AffineOperatorSet set = assemble_affine(FESpace(mesh));
  const ParameterPoint mu{3.0e3, g};
  const auto direct = assemble_on_original(mesh, mu, 0.71);
  const auto combined = combine_affine(set, mu, 0.71);
  const double tol = 1e-12;
  EXPECT_LT(relative_frobenius(combined.velocity_diffusion_x, direct.velocity_diffusion_x), tol);
  EXPECT_LT(relative_frobenius(combined.velocity_diffusion_y, direct.velocity_diffusion_y), tol);
  EXPECT_LT(relative_frobenius(combined.divergence_x, direct.divergence_x), tol);
  EXPECT_LT(relative_frobenius(combined.divergence_y, direct.divergence_y), tol);
  EXPECT_LT(relative_frobenius(combined.buoyancy, direct.buoyancy), tol);
  EXPECT_LT(relative_frobenius(combined.temperature_diffusion_x, direct.temperature_diffusion_x), tol);
  EXPECT_LT(relative_frobenius(combined.temperature_diffusion_y, direct.temperature_diffusion_y), tol);
  EXPECT_LT(relative_frobenius(combined.lift_convection, direct.lift_convection), tol);
}

INSTANTIATE_TEST_SUITE_P(Heights, AffineOracle, ::testing::Values(0.5, 1.0, 2.0, 1.37));

TEST(AffineBlocks, UnitHeightDiffusionIsTheScaledVectorLaplacian) {
  const FESpace s(build_uniform_mesh(6));
  const auto set = assemble_affine(s);
  const SparseMatrix a = 0.71 * (set.velocity_diffusion_x + set.velocity_diffusion_y);
  EXPECT_LT(relative_frobenius(a, 0.71 * block_diagonal(s.stiffness())), 1e-13);
  EXPECT_LT(relative_frobenius(SparseMatrix(set.velocity_diffusion_x.transpose()), set.velocity_diffusion_x), 1e-15);
}

TEST(AffineBlocks, ConstantVelocitiesAreDivergenceFree) {
  const FESpace s(build_uniform_mesh(6));
  const auto set = assemble_affine(s);
  const int n2 = s.layout().num_p2();
  Vector u(2 * n2);
  u.head(n2).setConstant(1.0);
  u.tail(n2).setConstant(-2.5);
  EXPECT_LT((set.divergence_x * u).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LT((set.divergence_y * u).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(AffineBlocks, ScaleConsistentlyUnderRefinement) {
  const auto coarse = assemble_affine(FESpace(build_uniform_mesh(8)));
  const auto fine = assemble_affine(FESpace(build_uniform_mesh(16)));
  // Stiffness entries are O(1) with 4x as many rows; mass and buoyancy entries scale with h^2.
  EXPECT_NEAR(fine.velocity_diffusion_x.norm() / coarse.velocity_diffusion_x.norm(), 2.0, 0.1);
  EXPECT_NEAR(fine.temperature_diffusion_y.norm() / coarse.temperature_diffusion_y.norm(), 2.0, 0.1);
  EXPECT_NEAR(fine.velocity_mass.norm() / coarse.velocity_mass.norm(), 0.5, 0.03);
  EXPECT_NEAR(fine.buoyancy.norm() / coarse.buoyancy.norm(), 0.5, 0.03);
  // Divergence entries scale with h.
  EXPECT_NEAR(fine.divergence_x.norm() / coarse.divergence_x.norm(), 1.0, 0.05);
}

TEST(NonlinearForms, VanishAtRest) {
  const auto& s = space8();
  std::mt19937_64 rng(6);
  const FESolution r = random_state(s, rng);
  const Vector zero = Vector::Zero(s.layout().velocity_size());
  const auto f = evaluate_nonlinear_forms(s, zero, r.temperature, {5e3, 1.5}, PhysicalConstants{});
  EXPECT_EQ(f.convection_velocity.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(f.convection_temperature.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(f.eddy_velocity.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(f.eddy_temperature.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(NonlinearForms, LinearVelocitiesConvectButAreNotFiltered) {
  const auto& s = space8();
  std::mt19937_64 rng(8);
  const FESolution r = random_state(s, rng);
  const Vector p1 = vms_project_velocity(s.layout(), r.velocity);
  const auto f = evaluate_nonlinear_forms(s, p1, r.temperature, {5e3, 1.0}, PhysicalConstants{});
  EXPECT_GT(f.convection_velocity.norm(), 1e-3);
  EXPECT_LT(f.eddy_velocity.lpNorm<Eigen::Infinity>(), 1e-13);
  EXPECT_LT(f.eddy_temperature.lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(NonlinearForms, EddyDiffusivityIsEddyViscosityOverPrandtl) {
  const auto& s = space8();
  std::mt19937_64 rng(10);
  const int n2 = s.layout().num_p2();
  for (double g : {0.5, 1.0, 2.0}) {
    const FESolution r = random_state(s, rng);
    // Feed the first velocity component as the temperature: the two eddy terms then
    // differ by exactly the Prandtl factor.
    const Vector theta = r.velocity.head(n2);
    const PhysicalConstants c{0.71, 0.1};
    const auto f = evaluate_nonlinear_forms(s, r.velocity, theta, {1e3, g}, c);
    EXPECT_LT((c.prandtl * f.eddy_temperature - f.eddy_velocity.head(n2)).norm(), 1e-13 * f.eddy_velocity.norm());
  }
}

TEST(NonlinearForms, EddyTermIsNonNegative) {
  const auto& s = space8();
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const FESolution w = random_state(s, rng);
    const FESolution v = random_state(s, rng);
    const double g = 0.5 + 0.15 * trial;
    const Vector nu = eddy_viscosity_field(s, w.velocity, g, 0.1);
    const SparseMatrix a = assemble_fluctuation_diffusion(s, nu, g, 1.0 / g);
    const int n2 = s.layout().num_p2();
    const double q = v.velocity.head(n2).dot(a * v.velocity.head(n2)) + v.velocity.tail(n2).dot(a * v.velocity.tail(n2));
    EXPECT_GE(q, -1e-14 * a.norm() * v.velocity.squaredNorm());
  }
}

TEST(NonlinearForms, ConvectionIsSkewForSolenoidalTransport) {
  // A steady state is discretely divergence-free; a generic field is not.
  const FullOrderModel fom(build_uniform_mesh(8), PhysicalConstants{});
  const FESolution steady = solve_fom(fom, {5e3, 1.0}, FomConfig{});
  const auto& s = fom.space();
  const int n2 = s.layout().num_p2();
  std::mt19937_64 rng(14);
  const FESolution generic = random_state(s, rng);
  auto skew_defect = [&](const Vector& w) {
    const auto w1 = s.evaluate(w.head(n2));
    const auto w2 = s.evaluate(w.tail(n2));
    const SparseMatrix c = assemble_convection(s, w1.value, w2.value, 1.0, 1.0);
    const SparseMatrix sym = SparseMatrix(c + SparseMatrix(c.transpose())) * 0.5;
    return sym.norm() / c.norm();
  };
  const double steady_defect = skew_defect(steady.velocity / steady.velocity.norm());
  const double generic_defect = skew_defect(generic.velocity / generic.velocity.norm());
  EXPECT_LT(steady_defect, 0.1 * generic_defect);
  EXPECT_LT(steady_defect, 5e-2);
}

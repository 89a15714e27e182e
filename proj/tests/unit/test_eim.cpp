#include "cavityrb/eim.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cavityrb;
using cavityrb::testing::random_vector;

namespace {

/// Parametric family on the quadrature points of an 8x8 mesh: smooth in the
/// parameter, so the interpolation error decays quickly.
Matrix smooth_family(int n_fields) {
  static const FESpace space(build_uniform_mesh(8));
  Matrix out(space.num_quadrature_points(), n_fields);
  for (int j = 0; j < n_fields; ++j) {
    const double a = 0.2 + 0.8 * j / (n_fields - 1.0);
    for (int q = 0; q < space.num_quadrature_points(); ++q) {
      const auto p = space.quadrature_point(q);
      out(q, j) = 1.0 / std::sqrt((p.x() - a - 0.1) * (p.x() - a - 0.1) + (p.y() - 0.5 * a) * (p.y() - 0.5 * a) + 0.05);
    }
  }
  return out;
}

/// Eddy viscosity fields of a few steady states.
const Matrix& viscosity_fields() {
  static const Matrix fields = [] {
    const FullOrderModel fom(build_uniform_mesh(8), PhysicalConstants{});
    const auto training = cavityrb::testing::log_line({1e3, 1e4, 1.0, 1.0}, 10);
    Matrix f(fom.space().num_quadrature_points(), static_cast<Eigen::Index>(training.size()));
    for (std::size_t j = 0; j < training.size(); ++j) {
      const FESolution s = solve_fom(fom, training[j], FomConfig{});
      f.col(static_cast<Eigen::Index>(j)) = eddy_viscosity_field(fom.space(), s.velocity, 1.0, 0.1);
    }
    return f;
  }();
  return fields;
}

}  // namespace

TEST(EimBuild, SingleFieldIsReproducedEverywhere) {
  const Matrix f = smooth_family(5).col(2);
  const auto eim = eim_build(f, 1e-8, 10);
  ASSERT_EQ(eim.size(), 1);
  EXPECT_LT((eim.interpolate(f.col(0)) - f.col(0)).lpNorm<Eigen::Infinity>(), 1e-14 * f.lpNorm<Eigen::Infinity>());
}

TEST(EimBuild, RejectsBadInput) {
  EXPECT_THROW(eim_build(Matrix(0, 0), 1e-3, 5), InvalidArgument);
  EXPECT_THROW(eim_build(smooth_family(4), 0.0, 5), InvalidArgument);
  EXPECT_THROW(eim_build(smooth_family(4), 1e-3, 0), InvalidArgument);
  EXPECT_THROW(eim_build(Matrix::Zero(10, 3), 1e-3, 5), DegenerateSnapshot);
}

TEST(EimBuild, RankDeficientSetIsDegenerateBeforeTolerance) {
  Matrix f = smooth_family(6);
  f.col(3) = 2.0 * f.col(1) - f.col(0);
  f.col(4) = f.col(0) + f.col(1);
  f.col(5) = -f.col(2);
  // Three independent fields cannot reach 1e-30.
  EXPECT_THROW(eim_build(f, 1e-30, 10), DegenerateSnapshot);
}

class EimProperties : public ::testing::TestWithParam<int> {
 protected:
  [[nodiscard]] Matrix fields() const { return GetParam() == 0 ? smooth_family(40) : viscosity_fields(); }
};

TEST_P(EimProperties, InterpolationSystemIsUnitLowerTriangular) {
  const auto eim = eim_build(fields(), 1e-8, 25);
  const int m = eim.size();
  for (int i = 0; i < m; ++i) {
    EXPECT_EQ(eim.interpolation(i, i), 1.0);
    for (int j = i + 1; j < m; ++j) EXPECT_EQ(eim.interpolation(i, j), 0.0);
    for (int j = 0; j < m; ++j) EXPECT_NEAR(eim.interpolation(i, j), eim.basis(eim.magic_points[i], j), 1e-15);
  }
}

TEST_P(EimProperties, ExactAtMagicPointsForArbitraryFields) {
  const auto eim = eim_build(fields(), 1e-8, 25);
  std::mt19937_64 rng(static_cast<unsigned>(GetParam()));
  for (int trial = 0; trial < 5; ++trial) {
    const Vector f = random_vector(static_cast<int>(eim.basis.rows()), rng);
    const Vector i = eim.interpolate(f);
    for (int p : eim.magic_points) EXPECT_NEAR(i[p], f[p], 1e-12 * f.lpNorm<Eigen::Infinity>());
  }
}

TEST_P(EimProperties, TrainingErrorIsMonotoneAndReplays) {
  const Matrix f = fields();
  const auto eim = eim_build(f, 1e-8, 25);
  for (std::size_t k = 1; k < eim.training_errors.size(); ++k) {
    EXPECT_LE(eim.training_errors[k], eim.training_errors[k - 1]) << "M=" << k + 1;
  }
  // Replaying every training field reproduces the recorded bound at each size.
  for (int m = 1; m <= eim.size(); ++m) {
    const auto sub = eim.truncated(m);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      const double e = (sub.interpolate(f.col(j)) - f.col(j)).lpNorm<Eigen::Infinity>() / f.col(j).lpNorm<Eigen::Infinity>();
      worst = std::max(worst, e);
    }
    EXPECT_NEAR(worst, eim.training_errors[m - 1], 1e-9 * std::max(1.0, worst)) << "M=" << m;
  }
}

TEST_P(EimProperties, CappedBuildsAreNestedPrefixes) {
  const Matrix f = fields();
  const auto full = eim_build(f, 1e-8, 25);
  for (int m : {1, 3, full.size() / 2, full.size()}) {
    const auto capped = eim_build(f, 1e-8, m);
    const auto cut = full.truncated(m);
    ASSERT_EQ(capped.size(), m);
    EXPECT_EQ(capped.magic_points, cut.magic_points);
    EXPECT_EQ((capped.basis - cut.basis).lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_EQ(capped.training_errors, cut.training_errors);
  }
}

INSTANTIATE_TEST_SUITE_P(Families, EimProperties, ::testing::Values(0, 1));

TEST(EimCoefficients, UnitAndZeroFields) {
  const auto eim = eim_build(smooth_family(30), 1e-6, 20);
  ASSERT_GE(eim.size(), 3);
  Vector at_magic(eim.size());
  for (int i = 0; i < eim.size(); ++i) at_magic[i] = eim.basis(eim.magic_points[i], 0);
  Vector expected = Vector::Zero(eim.size());
  expected[0] = 1.0;
  EXPECT_LT((eim.coefficients(at_magic) - expected).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_EQ(eim_coefficients(eim, Vector::Zero(eim.size())).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_THROW(eim.coefficients(Vector::Zero(eim.size() + 1)), InvalidArgument);
}

TEST(EimBuild, ProviderOverloadMatchesPrecomputedFields) {
  const Matrix f = smooth_family(12);
  std::vector<ParameterPoint> training;
  for (int j = 0; j < 12; ++j) training.push_back({static_cast<double>(j), 1.0});
  const auto a = eim_build(f, 1e-6, 12);
  const auto b = eim_build([&](const ParameterPoint& mu) { return Vector(f.col(static_cast<int>(mu.rayleigh))); },
                           training, 1e-6, 12);
  EXPECT_EQ(a.magic_points, b.magic_points);
  EXPECT_EQ(a.training_errors, b.training_errors);
}

TEST(EimBuild, StopsAtTheTolerance) {
  const auto eim = eim_build(viscosity_fields(), 1e-3, 40);
  EXPECT_LT(eim.training_errors.back(), 1e-3);
  if (eim.size() > 1) EXPECT_GE(eim.training_errors[eim.size() - 2], 1e-3);
}

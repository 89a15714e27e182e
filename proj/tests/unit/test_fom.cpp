#include "cavityrb/fom.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <random>

using namespace cavityrb;
using cavityrb::testing::difference;
using cavityrb::testing::random_state;
using cavityrb::testing::random_vector;

namespace {

const FullOrderModel& fom16() {
  static const FullOrderModel m(build_uniform_mesh(16), PhysicalConstants{});
  return m;
}

const FullOrderModel& fom8() {
  static const FullOrderModel m(build_uniform_mesh(8), PhysicalConstants{});
  return m;
}

struct SteadyRun {
  FESolution state;
  std::vector<FomStep> steps;
};

const SteadyRun& steady_ra1e4() {
  static const SteadyRun run = [] {
    SteadyRun r;
    r.state = solve_fom(fom16(), {1e4, 1.0}, FomConfig{}, &r.steps);
    return r;
  }();
  return run;
}

/// Rotation by pi about the cavity centre on P2 / P1 node grids.
Vector rotate(const Vector& v, int side) {
  Vector out(v.size());
  const int n = side * side;
  for (int b = 0; b < v.size() / n; ++b) {
    for (int k = 0; k < n; ++k) out[b * n + k] = v[b * n + (n - 1 - k)];
  }
  return out;
}

}  // namespace

class Conduction : public ::testing::TestWithParam<double> {};

TEST_P(Conduction, ZeroRayleighGivesTheLinearProfile) {
  const double g = GetParam();
  const FullOrderModel model(build_uniform_mesh(16), PhysicalConstants{});
  std::vector<FomStep> steps;
  const auto t0 = std::chrono::steady_clock::now();
  const FESolution s = solve_fom(model, {0.0, g}, FomConfig{}, &steps);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // The temperature fluctuation about 1 - x must vanish together with u and p.
  EXPECT_LT(x_norm(model.space(), s), 1e-10);
  EXPECT_LE(steps.size(), 2u);
  EXPECT_LT(seconds, 5.0);
}

INSTANTIATE_TEST_SUITE_P(Heights, Conduction, ::testing::Values(0.5, 1.0, 2.0));

TEST(SolveFom, RejectsInvalidControls) {
  FomConfig bad;
  bad.dt = 0.0;
  EXPECT_THROW(solve_fom(fom8(), {1e3, 1.0}, bad), InvalidArgument);
  EXPECT_THROW(solve_fom(fom8(), {1e3, -1.0}, FomConfig{}), InvalidArgument);
  EXPECT_THROW(solve_fom(fom8(), {-5.0, 1.0}, FomConfig{}), InvalidArgument);
}

TEST(SolveFom, ReportsNonConvergenceWithTheLastIncrement) {
  FomConfig short_run;
  short_run.max_steps = 3;
  try {
    solve_fom(fom8(), {5e3, 1.0}, short_run);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_GT(e.last_increment(), short_run.steady_tol);
  }
}

TEST(SteadyState, RecirculatesAndIsCentroSymmetric) {
  const auto& s = steady_ra1e4().state;
  const auto& space = fom16().space();
  const int side = space.layout().fine_side();
  EXPECT_GT(s.velocity.lpNorm<Eigen::Infinity>(), 1.0);

  FESolution mirrored = s;
  mirrored.velocity = -rotate(s.velocity, side);
  mirrored.temperature = -rotate(s.temperature, side);  // theta -> 1 - theta on the fluctuation about 1 - x
  mirrored.pressure = s.pressure;
  FESolution d = difference(mirrored, s);
  d.pressure.setZero();
  EXPECT_LT(x_norm(space, d), 1e-6);
}

TEST(SteadyState, SatisfiesTheDiscreteEquations) {
  const auto& model = fom16();
  const auto& s = steady_ra1e4().state;
  const FESolution start = zero_solution(model.space(), s.parameter);
  const double scale = model.dual_norm(model.residual(start));
  const double eps_fe = FomConfig{}.steady_tol;
  EXPECT_LT(model.dual_norm(model.residual(s)), 10.0 * eps_fe * scale);

  const auto& a = model.affine();
  const Vector div = s.parameter.height * (a.divergence_x * s.velocity) + a.divergence_y * s.velocity;
  EXPECT_LT(div.lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_NEAR(model.space().pressure_mean_weights().dot(s.pressure), 0.0, 1e-12);
}

TEST(SteadyState, IncrementsDecreaseOverTheFinalSteps) {
  const auto& steps = steady_ra1e4().steps;
  ASSERT_GE(steps.size(), 11u);
  for (std::size_t k = steps.size() - 10; k < steps.size(); ++k) {
    EXPECT_LT(steps[k].increment, steps[k - 1].increment) << "step " << steps[k].step;
  }
}

TEST(Jacobian, MatchesFiniteDifferencesWithoutEddyDiffusivity) {
  // Without the Smagorinsky term the derivative is exact.
  const FullOrderModel model(build_uniform_mesh(6), PhysicalConstants{0.71, 0.0});
  std::mt19937_64 rng(31);
  const FESolution s = random_state(model.space(), rng, {3e3, 1.4});
  const FESolution ds = random_state(model.space(), rng, {3e3, 1.4});
  const auto& sys = model.system();
  const Vector x = sys.pack(s);
  const Vector dx = sys.pack(ds);
  const double h = 1e-6;
  const Vector fd = (model.residual(sys.unpack(x + h * dx, s.parameter)) -
                     model.residual(sys.unpack(x - h * dx, s.parameter))) / (2 * h);
  const Vector jv = model.jacobian(s) * dx;
  EXPECT_LT((fd - jv).norm(), 1e-7 * jv.norm());
}

TEST(Jacobian, EddyViscosityDerivativeIsIncludedForVelocity) {
  const auto& model = fom8();
  std::mt19937_64 rng(37);
  const FESolution s = random_state(model.space(), rng, {3e3, 1.0});
  FESolution ds = random_state(model.space(), rng, {3e3, 1.0});
  ds.temperature.setZero();
  ds.pressure.setZero();
  const auto& sys = model.system();
  const Vector x = sys.pack(s);
  const Vector dx = sys.pack(ds);
  const double h = 1e-6;
  const Vector fd = (model.residual(sys.unpack(x + h * dx, s.parameter)) -
                     model.residual(sys.unpack(x - h * dx, s.parameter))) / (2 * h);
  const Vector jv = model.jacobian(s) * dx;
  // Momentum rows only: the eddy-diffusivity derivative in the energy rows is left out.
  const int nu = sys.velocity_size();
  EXPECT_LT((fd.head(nu) - jv.head(nu)).norm(), 1e-6 * jv.head(nu).norm());
}

TEST(Supremizer, ZeroPressureGivesZero) {
  const auto& model = fom8();
  const Vector t = solve_supremizer(model, Vector::Zero(model.space().layout().num_p1()), 1.3);
  EXPECT_EQ(t.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Supremizer, SatisfiesItsDefiningIdentityAndIsLinear) {
  const auto& model = fom8();
  const auto& a = model.affine();
  std::mt19937_64 rng(41);
  for (double g : {0.5, 1.0, 2.0}) {
    const Vector q = random_vector(model.space().layout().num_p1(), rng);
    const Vector t = solve_supremizer(model, q, g);
    const SparseMatrix k = block_diagonal(model.space().stiffness());
    const double lhs = t.dot(k * t);
    const double rhs = q.dot(g * (a.divergence_x * t) + a.divergence_y * t);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
    const Vector t3 = solve_supremizer(model, -3.0 * q, g);
    EXPECT_LT((t3 + 3.0 * t).norm(), 1e-12 * t.norm());
    for (int i : model.space().layout().velocity_dirichlet()) EXPECT_EQ(t[i], 0.0);
  }
}

TEST(SystemLayout, PackAndUnpackRoundTrip) {
  const auto& model = fom8();
  std::mt19937_64 rng(43);
  const FESolution s = random_state(model.space(), rng);
  const FESolution back = model.system().unpack(model.system().pack(s), s.parameter);
  EXPECT_EQ(x_norm(model.space(), difference(back, s)), 0.0);
}

TEST(RieszMap, RepresenterNormIsTheDualNorm) {
  const auto& model = fom8();
  std::mt19937_64 rng(47);
  const Vector f = random_vector(model.system().size(), rng);
  const Vector r = model.riesz(f);
  // (r, v)_X = f(v) for v in the zero-mean space: test with v = r.
  EXPECT_NEAR(model.x_inner(r, r), f.dot(r), 1e-10 * f.dot(r));
  EXPECT_NEAR(model.dual_norm(f), model.x_norm(r), 1e-12 * model.x_norm(r));
  EXPECT_NEAR(model.mean_constraint().dot(r), 0.0, 1e-12);
}

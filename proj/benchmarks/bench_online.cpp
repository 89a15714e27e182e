// Online kernels against the full-order operations they replace.

#include "pipeline/commands.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace cavityrb;

namespace {

struct Fixture {
  RunConfig config;
  std::unique_ptr<FullOrderModel> fom;
  OfflineResult offline;
  FESolution state;
};

const Fixture& fixture() {
  static const std::unique_ptr<Fixture> f = [] {
    auto out = std::make_unique<Fixture>();
    out->config.n_h = 8;
    out->config.eim_training_1d = 16;
    out->config.greedy_training_1d = 24;
    out->config.beta_training_1d = 5;
    out->config.inverse_samples = 20;
    out->fom = std::make_unique<FullOrderModel>(build_uniform_mesh(out->config.n_h), out->config.constants());
    out->offline = run_offline(out->config, *out->fom);
    out->state = solve_fom(*out->fom, {5000.0, 1.0}, out->config.fom());
    return out;
  }();
  return *f;
}

const ParameterPoint kMu{4321.0, 1.0};

void BM_RbSolve(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(rb_solve(kMu, f.offline.artifact.model, f.config.newton()));
  state.counters["N"] = f.offline.artifact.model.size();
}
BENCHMARK(BM_RbSolve)->Unit(benchmark::kMicrosecond);

void BM_ResidualDualNorm(benchmark::State& state) {
  const auto& f = fixture();
  const ReducedSolution r = rb_solve(kMu, f.offline.artifact.model, f.config.newton());
  for (auto _ : state) benchmark::DoNotOptimize(residual_dual_norm(r, f.offline.artifact.model));
}
BENCHMARK(BM_ResidualDualNorm)->Unit(benchmark::kMicrosecond);

void BM_SurrogateCertificate(benchmark::State& state) {
  const auto& f = fixture();
  const auto& a = f.offline.artifact;
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify(1e-6, a.surrogate(kMu), lipschitz_rho(kMu.height, a.constants), false));
  }
}
BENCHMARK(BM_SurrogateCertificate);

void BM_EimCoefficients(benchmark::State& state) {
  const auto& eim = fixture().offline.artifact.model.eim;
  const int m = std::min<int>(static_cast<int>(state.range(0)), eim.size());
  const EIMApproximation part = eim.truncated(m);
  const Vector values = Vector::LinSpaced(m, 1.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(part.coefficients(values));
  state.counters["M"] = m;
}
BENCHMARK(BM_EimCoefficients)->Arg(4)->Arg(8)->Arg(64);

void BM_FomResidual(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(f.fom->residual(f.state));
}
BENCHMARK(BM_FomResidual)->Unit(benchmark::kMicrosecond);

void BM_FomJacobian(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(f.fom->jacobian(f.state));
}
BENCHMARK(BM_FomJacobian)->Unit(benchmark::kMillisecond);

void BM_FomSolve(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(solve_fom(*f.fom, kMu, f.config.fom()));
}
BENCHMARK(BM_FomSolve)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();

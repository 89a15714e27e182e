#pragma once

#include "cavityrb/rb_greedy.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace cavityrb::testing {

inline Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

/// Random state satisfying the wall conditions: no-slip velocity, zero temperature
/// fluctuation on the vertical walls, zero-mean pressure.
inline FESolution random_state(const FESpace& space, std::mt19937_64& rng, const ParameterPoint& mu = {}) {
  const DofLayout& d = space.layout();
  FESolution s = zero_solution(space, mu);
  s.velocity = random_vector(d.velocity_size(), rng);
  for (int i : d.velocity_dirichlet()) s.velocity[i] = 0.0;
  s.temperature = random_vector(d.temperature_size(), rng);
  for (int i : d.temperature_dirichlet()) s.temperature[i] = 0.0;
  s.pressure = zero_mean(space, random_vector(d.pressure_size(), rng));
  return s;
}

inline double relative_frobenius(const SparseMatrix& a, const SparseMatrix& b) {
  const double nb = b.norm();
  return (a - b).norm() / (nb > 0.0 ? nb : 1.0);
}

inline FESolution difference(const FESolution& a, const FESolution& b) {
  FESolution d = a;
  d.velocity -= b.velocity;
  d.temperature -= b.temperature;
  d.pressure -= b.pressure;
  return d;
}

/// A small reduced model on an 8x8 mesh over Ra in [1e3, 1e4], built once per
/// test binary: FOM sweep, EIM, constants, beta surrogate and greedy.
struct SmallModel {
  static constexpr int kMesh = 8;
  ParameterBox box{1.0e3, 1.0e4, 1.0, 1.0};
  PhysicalConstants constants;
  double eps_eim = 1e-5;
  std::unique_ptr<FullOrderModel> fom;
  EIMApproximation eim;
  CertificationConstants cert;
  BetaSurrogate surrogate;
  GreedyResult greedy;

  [[nodiscard]] const ReducedModel& model() const { return greedy.model; }
  [[nodiscard]] FESolution truth(const ParameterPoint& mu) const { return solve_fom(*fom, mu, FomConfig{}); }
  [[nodiscard]] Certifier certifier() const {
    return [this](const ParameterPoint& mu, double eps) {
      return certify(eps, surrogate(mu), lipschitz_rho(mu.height, cert), false);
    };
  }
};

inline std::vector<ParameterPoint> log_line(const ParameterBox& box, int n) {
  std::vector<ParameterPoint> out;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    out.push_back({std::pow(10.0, (1 - t) * std::log10(box.ra_min) + t * std::log10(box.ra_max)), box.height_min});
  }
  return out;
}

inline const SmallModel& small_model() {
  static const std::unique_ptr<SmallModel> instance = [] {
    auto m = std::make_unique<SmallModel>();
    m->fom = std::make_unique<FullOrderModel>(build_uniform_mesh(SmallModel::kMesh), m->constants);
    const auto training = log_line(m->box, 24);
    std::vector<FESolution> sweep;
    Matrix fields(m->fom->space().num_quadrature_points(), static_cast<Eigen::Index>(training.size()));
    for (std::size_t i = 0; i < training.size(); ++i) {
      sweep.push_back(m->truth(training[i]));
      fields.col(static_cast<Eigen::Index>(i)) =
          eddy_viscosity_field(m->fom->space(), sweep.back().velocity, 1.0, m->constants.smagorinsky);
    }
    m->eim = eim_build(fields, m->eps_eim, 40);
    m->cert = compute_constants(*m->fom);
    const auto nodes = log_line(m->box, 7);
    std::vector<double> betas;
    for (const auto& mu : nodes) betas.push_back(beta_exact(*m->fom, m->truth(mu)).beta);
    m->surrogate = BetaSurrogate(m->box, nodes, betas);
    GreedyOptions go;
    go.tol = 1e-3;
    go.n_max = 20;
    const auto greedy_training = log_line(m->box, 40);
    m->greedy = rb_greedy(*m->fom, m->box, greedy_training, m->eim, m->certifier(),
                          [&](const ParameterPoint& mu) { return m->truth(mu); }, go);
    return m;
  }();
  return *instance;
}

}  // namespace cavityrb::testing

#include "cavityrb/rb_greedy.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace cavityrb {

double greedy_indicator(const ReducedModel& model, const ParameterPoint& mu, const Certifier& certifier,
                        const NewtonOptions& newton, ErrorCertificate* certificate) {
  try {
    const ReducedSolution rs = rb_solve(mu, model, newton);
    const ErrorCertificate c = certifier(mu, residual_dual_norm(rs, model));
    if (certificate != nullptr) *certificate = c;
    return c.indicator();
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
}

GreedyResult rb_greedy(const FullOrderModel& fom, const ParameterBox& box, const std::vector<ParameterPoint>& training,
                       const EIMApproximation& eim, const Certifier& certifier, const SnapshotSource& truth,
                       const GreedyOptions& options) {
  if (training.empty()) throw InvalidArgument("rb_greedy: empty training set");
  if (!(options.tol > 0.0) || options.n_max < 1) throw InvalidArgument("rb_greedy: tol and n_max must be positive");
  const auto start = std::chrono::steady_clock::now();

  // First pick: the training point closest to the centre of the scaled box.
  std::size_t pick = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < training.size(); ++i) {
    const double d = (box.scaled(training[i]) - Eigen::Vector2d(0.5, 0.5)).norm();
    if (d < best) {
      best = d;
      pick = i;
    }
  }

  ReducedProjector projector(fom, eim);
  GreedyResult result;
  result.model.box = box;
  result.model.constants = fom.constants();
  result.model.n_h = fom.space().mesh().divisions();
  result.model.eim = eim;
  std::vector<std::size_t> picked;

  while (true) {
    const ParameterPoint mu = training[pick];
    picked.push_back(pick);
    FESolution snapshot = truth(mu);
    projector.enrich(snapshot);
    result.snapshots.push_back(std::move(snapshot));

    ReducedModel& model = result.model;
    model.basis = projector.space();
    model.operators = projector.operators();
    model.riesz = projector.riesz();
    model.snapshot_coordinates.clear();
    for (const auto& s : result.snapshots) model.snapshot_coordinates.push_back(project_solution(s, model.basis, fom));

    GreedyLogEntry entry;
    entry.n = model.size();
    entry.selected = mu;
    std::size_t next = 0;
    double worst = -1.0;
    for (std::size_t i = 0; i < training.size(); ++i) {
      ErrorCertificate c;
      const double ind = greedy_indicator(model, training[i], certifier, options.newton, &c);
      if (std::isfinite(ind)) {
        entry.max_tau = std::max(entry.max_tau, c.tau);
        if (c.defined) entry.max_delta = std::max(entry.max_delta, c.delta);
      }
      if (i == pick) entry.selected_indicator = ind;
      if (ind > worst) {
        worst = ind;
        next = i;
      }
    }
    entry.max_indicator = worst;
    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);

    if (worst < options.tol || model.size() >= options.n_max) break;
    for (std::size_t p : picked) {
      if (p == next) {
        throw GreedyStall("rb_greedy: parameter (" + std::to_string(training[next].rayleigh) + ", " +
                          std::to_string(training[next].height) + ") selected twice at N = " +
                          std::to_string(model.size()));
      }
    }
    pick = next;
  }
  result.model.riesz.compress();
  return result;
}

}  // namespace cavityrb

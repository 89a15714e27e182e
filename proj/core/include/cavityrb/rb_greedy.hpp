#pragma once

#include "cavityrb/certification.hpp"
#include "cavityrb/rb_online.hpp"

#include <functional>
#include <vector>

namespace cavityrb {

struct GreedyOptions {
  double tol = 1e-3;
  int n_max = 20;
  NewtonOptions newton;
};

struct GreedyLogEntry {
  int n = 0;
  ParameterPoint selected;
  double max_delta = 0.0;      // over points with a defined certificate (0 when none)
  double max_tau = 0.0;
  double max_indicator = 0.0;  // inf when some online solve failed
  double selected_indicator = 0.0;
  double wall_seconds = 0.0;
};

/// Certificate at mu from the online residual norm.
using Certifier = std::function<ErrorCertificate(const ParameterPoint&, double epsilon)>;
/// Full-order truth at mu (may be served from a cache).
using SnapshotSource = std::function<FESolution(const ParameterPoint&)>;

struct GreedyResult {
  ReducedModel model;
  std::vector<GreedyLogEntry> log;
  std::vector<FESolution> snapshots;
};

/// Online indicator: Delta when tau <= 1, tau otherwise, inf when the reduced solve fails.
double greedy_indicator(const ReducedModel& model, const ParameterPoint& mu, const Certifier& certifier,
                        const NewtonOptions& newton, ErrorCertificate* certificate = nullptr);

/// Throws GreedyStall when the arg-max repeats an earlier pick.
GreedyResult rb_greedy(const FullOrderModel& fom, const ParameterBox& box, const std::vector<ParameterPoint>& training,
                       const EIMApproximation& eim, const Certifier& certifier, const SnapshotSource& truth,
                       const GreedyOptions& options);

}  // namespace cavityrb

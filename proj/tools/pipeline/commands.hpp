#pragma once

#include "cavityrb/rb_greedy.hpp"
#include "pipeline/artifact.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cavityrb {

using ProgressLog = std::function<void(const std::string&)>;

struct FomSweepEntry {
  ParameterPoint parameter;
  int steps = 0;
  double final_increment = 0.0;
  double seconds = 0.0;
};

struct BetaTrainingEntry {
  ParameterPoint parameter;
  double beta = 0.0;
};

/// Offline products: the artifact plus the diagnostics written next to it.
struct OfflineResult {
  OfflineArtifact artifact;
  std::vector<FomSweepEntry> sweep;
  Matrix eim_fields;  // eddy-viscosity training columns, one per EIM training point
  double sweep_seconds = 0.0;
  double eim_seconds = 0.0;
  std::vector<BetaTrainingEntry> beta_training;
  double beta_loo_error = 0.0;
  std::vector<GreedyLogEntry> greedy_log;
  std::vector<FESolution> snapshots;  // greedy picks, in order
  double seconds = 0.0;
};

/// FOM training sweep, EIM, constants, beta grid, greedy. Module errors are
/// rethrown with the stage name prefixed.
OfflineResult run_offline(const RunConfig& config, const FullOrderModel& fom, const ProgressLog& log = nullptr);

/// Surrogate-beta certifier used by the greedy and the online command.
Certifier surrogate_certifier(const BetaSurrogate& surrogate, const CertificationConstants& constants);

struct OnlineRow {
  ParameterPoint parameter;
  int n = 0;
  int iterations = 0;
  std::optional<ErrorCertificate> certificate;
  double true_error = std::numeric_limits<double>::quiet_NaN();
  double effectivity = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  std::string status = "ok";
  std::optional<ReducedSolution> solution;
};

struct OnlineOptions {
  /// Solve the FOM at each point and report the true error.
  bool truth = false;
  /// Exact beta and exact-viscosity residual instead of the surrogate (needs `truth`-style FOM work).
  bool exact_beta = false;
};

/// One reduced solve and certificate; divergence is reported in `status`, not thrown.
OnlineRow run_online_point(const OfflineArtifact& artifact, const ParameterPoint& mu, const FullOrderModel* fom,
                           const OnlineOptions& options);

struct BenchmarkRow {
  ParameterPoint parameter;
  double t_fe = 0.0;
  double t_online = 0.0;  // median of 3
  double speedup = 0.0;
  double error_velocity_h1 = 0.0;
  double error_temperature_h1 = 0.0;
  double error_pressure_l2 = 0.0;
};

BenchmarkRow run_benchmark_point(const OfflineArtifact& artifact, const FullOrderModel& fom, const ParameterPoint& mu);

/// Relative errors of an approximation against the truth: |grad du|/|grad u|,
/// |grad dtheta|/|grad theta| on the full temperature, |dp|/|p|.
std::array<double, 3> relative_errors(const FESpace& space, const FESolution& approx, const FESolution& truth);

// CSV writers (header row first).
void write_sweep_csv(std::ostream& out, const std::vector<FomSweepEntry>& rows);
void write_eim_csv(std::ostream& out, const EIMApproximation& eim);
void write_greedy_csv(std::ostream& out, const std::vector<GreedyLogEntry>& rows);
void write_beta_csv(std::ostream& out, const std::vector<BetaTrainingEntry>& rows);
void write_online_csv(std::ostream& out, const std::vector<OnlineRow>& rows);
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);
/// Gnuplot two-column data.
void write_xy(std::ostream& out, const std::vector<std::pair<double, double>>& points);

/// Writes the offline diagnostics (CSV and .dat) into dir/logs.
void write_offline_logs(const std::string& dir, const OfflineResult& result);

}  // namespace cavityrb

#include "pipeline/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

namespace cavityrb {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  }
}

struct SolutionCache {
  const FullOrderModel* fom;
  FomConfig config;
  std::map<std::pair<double, double>, FESolution> solutions;
  std::vector<FomSweepEntry>* log;

  const FESolution& get(const ParameterPoint& mu) {
    const auto key = std::make_pair(mu.rayleigh, mu.height);
    const auto it = solutions.find(key);
    if (it != solutions.end()) return it->second;
    std::vector<FomStep> steps;
    const auto t0 = Clock::now();
    FESolution s = solve_fom(*fom, mu, config, &steps);
    if (log != nullptr) log->push_back({mu, static_cast<int>(steps.size()), steps.empty() ? 0.0 : steps.back().increment, since(t0)});
    return solutions.emplace(key, std::move(s)).first->second;
  }
};

}  // namespace

Certifier surrogate_certifier(const BetaSurrogate& surrogate, const CertificationConstants& constants) {
  return [&surrogate, &constants](const ParameterPoint& mu, double epsilon) {
    return certify(epsilon, surrogate(mu), lipschitz_rho(mu.height, constants), false);
  };
}

OfflineResult run_offline(const RunConfig& config, const FullOrderModel& fom, const ProgressLog& log) {
  validate_config(config);
  if (config.box.rayleigh_fixed() && config.box.height_fixed()) {
    throw ConfigError("offline: the parameter box must have a nonempty range in at least one direction");
  }
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  const auto t0 = Clock::now();
  OfflineResult out;
  SolutionCache cache{&fom, config.fom(), {}, &out.sweep};

  const auto eim_training = training_grid(config.box, config.eim_training_1d, config.eim_training_2d);
  say("fom sweep: " + std::to_string(eim_training.size()) + " training points");
  Matrix fields(fom.space().num_quadrature_points(), static_cast<Eigen::Index>(eim_training.size()));
  stage("fom sweep", [&] {
    for (std::size_t i = 0; i < eim_training.size(); ++i) {
      const auto& mu = eim_training[i];
      const FESolution& s = cache.get(mu);
      fields.col(static_cast<Eigen::Index>(i)) =
          eddy_viscosity_field(fom.space(), s.velocity, mu.height, config.smagorinsky);
      say("  Ra=" + num(mu.rayleigh) + " height=" + num(mu.height) + " steps=" + std::to_string(out.sweep.back().steps) +
          " " + num(out.sweep.back().seconds) + " s");
    }
    return 0;
  });
  out.sweep_seconds = since(t0);

  const auto t_eim = Clock::now();
  const EIMApproximation eim = stage("eim", [&] { return eim_build(fields, config.eps_eim, config.m_max); });
  out.eim_seconds = since(t_eim);
  say("eim: M=" + std::to_string(eim.size()) + " error=" + num(eim.training_errors.back()));

  CertificationConstants constants = stage("constants", [&] {
    return compute_constants(fom, config.inverse_samples, config.seed);
  });
  for (const auto& [key, s] : cache.solutions) {
    const auto [gu, gt] = gradient_sup_norms(fom.space(), s);
    constants.sup_velocity_gradient = std::max(constants.sup_velocity_gradient, gu);
    constants.sup_temperature_gradient = std::max(constants.sup_temperature_gradient, gt);
  }
  say("constants: C_u=" + num(constants.sobolev_velocity) + " C_theta=" + num(constants.sobolev_temperature) +
      " C_f=" + num(constants.projector_stability) + " C_inv=" + num(constants.inverse));

  const auto beta_grid = training_grid(config.box, config.beta_training_1d, config.beta_training_2d);
  BetaSurrogate surrogate = stage("beta training", [&] {
    std::vector<double> values;
    for (const auto& mu : beta_grid) {
      const double b = beta_exact(fom, cache.get(mu)).beta;
      out.beta_training.push_back({mu, b});
      values.push_back(b);
      say("  beta(Ra=" + num(mu.rayleigh) + ", height=" + num(mu.height) + ") = " + num(b));
    }
    return BetaSurrogate(config.box, beta_grid, values);
  });
  out.beta_loo_error = surrogate.leave_one_out_error();
  say("beta surrogate: leave-one-out error " + num(out.beta_loo_error));
  if (out.beta_loo_error > config.beta_loo_tol) {
    say("warning: beta surrogate leave-one-out error exceeds beta_loo_tol");
  }

  const auto greedy_training = training_grid(config.box, config.greedy_training_1d, config.greedy_training_2d);
  GreedyOptions go;
  go.tol = config.eps_rb;
  go.n_max = config.n_max;
  go.newton = config.newton();
  const Certifier certifier = surrogate_certifier(surrogate, constants);
  GreedyResult greedy = stage("greedy", [&] {
    return rb_greedy(fom, config.box, greedy_training, eim, certifier,
                     [&](const ParameterPoint& mu) { return cache.get(mu); }, go);
  });
  for (const auto& e : greedy.log) {
    say("greedy: N=" + std::to_string(e.n) + " max indicator=" + num(e.max_indicator));
  }

  out.greedy_log = greedy.log;
  out.eim_fields = std::move(fields);
  out.snapshots = std::move(greedy.snapshots);
  out.artifact.config = config;
  out.artifact.model = std::move(greedy.model);
  out.artifact.constants = constants;
  out.artifact.surrogate = std::move(surrogate);
  out.seconds = since(t0);
  return out;
}

OnlineRow run_online_point(const OfflineArtifact& artifact, const ParameterPoint& mu, const FullOrderModel* fom,
                           const OnlineOptions& options) {
  const ReducedModel& model = artifact.model;
  if (!model.box.contains(mu)) {
    throw InvalidArgument("parameter (" + num(mu.rayleigh) + ", " + num(mu.height) + ") lies outside the box");
  }
  if ((options.truth || options.exact_beta) && fom == nullptr) {
    throw InvalidArgument("online: truth and exact-beta modes need the full-order model");
  }
  OnlineRow row;
  row.parameter = mu;
  row.n = model.size();
  const auto t0 = Clock::now();
  ReducedSolution rs;
  try {
    rs = rb_solve(mu, model, artifact.config.newton());
  } catch (const NewtonDivergence&) {
    row.status = "newton_divergence";
    row.seconds = since(t0);
    return row;
  }
  const double rho = lipschitz_rho(mu.height, artifact.constants);
  if (!options.exact_beta) {
    row.certificate = certify(residual_dual_norm(rs, model), artifact.surrogate(mu), rho, false);
  }
  row.seconds = since(t0);
  row.iterations = rs.newton_iterations;
  const FESolution reduced = reconstruct(rs, model.basis);
  if (options.exact_beta) {
    const double eps = residual_dual_norm_direct(rs, model, *fom, false);
    const InfSupResult b = beta_exact(*fom, reduced, true);
    row.certificate = certify(eps, b.beta, rho, true);
    row.certificate->gamma = b.gamma;
  }
  if (options.truth) {
    const FESolution truth = solve_fom(*fom, mu, artifact.config.fom());
    const BoundCheck rep = check_error_bound(fom->space(), reduced, truth, *row.certificate);
    row.true_error = rep.true_error;
    row.effectivity = rep.effectivity;
  }
  row.solution = std::move(rs);
  return row;
}

std::array<double, 3> relative_errors(const FESpace& space, const FESolution& approx, const FESolution& truth) {
  const int n2 = space.layout().num_p2();
  const SparseMatrix& k = space.stiffness();
  auto h1 = [&](const Vector& v) { return std::sqrt(std::max(0.0, v.dot(k * v))); };
  auto vel = [&](const Vector& v) { return std::sqrt(std::pow(h1(v.head(n2)), 2) + std::pow(h1(v.tail(n2)), 2)); };
  const Vector lift = lift_vector(space);
  const Vector du = approx.velocity - truth.velocity;
  const Vector dt = approx.temperature - truth.temperature;
  const Vector dp = approx.pressure - truth.pressure;
  const SparseMatrix& m = space.p1_mass();
  auto l2 = [&](const Vector& v) { return std::sqrt(std::max(0.0, v.dot(m * v))); };
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : a; };
  return {ratio(vel(du), vel(truth.velocity)), ratio(h1(dt), h1(truth.temperature + lift)), ratio(l2(dp), l2(truth.pressure))};
}

BenchmarkRow run_benchmark_point(const OfflineArtifact& artifact, const FullOrderModel& fom, const ParameterPoint& mu) {
  const ReducedModel& model = artifact.model;
  if (!model.box.contains(mu)) throw InvalidArgument("benchmark: parameter outside the box");
  BenchmarkRow row;
  row.parameter = mu;
  auto t0 = Clock::now();
  const FESolution truth = solve_fom(fom, mu, artifact.config.fom());
  row.t_fe = since(t0);

  std::vector<double> times;
  ReducedSolution rs;
  for (int rep = 0; rep < 3; ++rep) {
    t0 = Clock::now();
    rs = rb_solve(mu, model, artifact.config.newton());
    const ErrorCertificate c = certify(residual_dual_norm(rs, model), artifact.surrogate(mu),
                                       lipschitz_rho(mu.height, artifact.constants), false);
    times.push_back(since(t0));
    (void)c;
  }
  std::sort(times.begin(), times.end());
  row.t_online = times[1];
  row.speedup = row.t_fe / row.t_online;
  const auto errs = relative_errors(fom.space(), reconstruct(rs, model.basis), truth);
  row.error_velocity_h1 = errs[0];
  row.error_temperature_h1 = errs[1];
  row.error_pressure_l2 = errs[2];
  return row;
}

// ---------------------------------------------------------------------------

void write_sweep_csv(std::ostream& out, const std::vector<FomSweepEntry>& rows) {
  out << "Ra,mu_g,steps,final_increment,seconds\n";
  for (const auto& r : rows) {
    out << num(r.parameter.rayleigh) << ',' << num(r.parameter.height) << ',' << r.steps << ',' << num(r.final_increment)
        << ',' << num(r.seconds) << '\n';
  }
}

void write_eim_csv(std::ostream& out, const EIMApproximation& eim) {
  out << "m,magic_point,training_error\n";
  for (int m = 0; m < eim.size(); ++m) {
    out << m + 1 << ',' << eim.magic_points[m] << ',' << num(eim.training_errors[m]) << '\n';
  }
}

void write_greedy_csv(std::ostream& out, const std::vector<GreedyLogEntry>& rows) {
  out << "N,Ra,mu_g,max_delta,max_tau,max_indicator,selected_indicator,wall_seconds\n";
  for (const auto& r : rows) {
    out << r.n << ',' << num(r.selected.rayleigh) << ',' << num(r.selected.height) << ',' << num(r.max_delta) << ','
        << num(r.max_tau) << ',' << num(r.max_indicator) << ',' << num(r.selected_indicator) << ','
        << num(r.wall_seconds) << '\n';
  }
}

void write_beta_csv(std::ostream& out, const std::vector<BetaTrainingEntry>& rows) {
  out << "Ra,mu_g,beta\n";
  for (const auto& r : rows) out << num(r.parameter.rayleigh) << ',' << num(r.parameter.height) << ',' << num(r.beta) << '\n';
}

void write_online_csv(std::ostream& out, const std::vector<OnlineRow>& rows) {
  out << "Ra,mu_g,N,iterations,epsilon,beta,beta_source,rho,tau,delta,defined,true_error,effectivity,online_seconds,"
         "status\n";
  for (const auto& r : rows) {
    out << num(r.parameter.rayleigh) << ',' << num(r.parameter.height) << ',' << r.n << ',' << r.iterations << ',';
    if (r.certificate) {
      const auto& c = *r.certificate;
      out << num(c.epsilon) << ',' << num(c.beta) << ',' << (c.beta_certified ? "exact" : "uncertified-beta") << ','
          << num(c.rho) << ',' << num(c.tau) << ',' << num(c.delta) << ',' << (c.defined ? 1 : 0) << ',';
    } else {
      out << ",,,,,,,";
    }
    out << num(r.true_error) << ',' << num(r.effectivity) << ',' << num(r.seconds) << ',' << r.status << '\n';
  }
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "Ra,mu_g,t_fe,t_online,speedup,error_u_h1,error_theta_h1,error_p_l2\n";
  for (const auto& r : rows) {
    out << num(r.parameter.rayleigh) << ',' << num(r.parameter.height) << ',' << num(r.t_fe) << ',' << num(r.t_online)
        << ',' << num(r.speedup) << ',' << num(r.error_velocity_h1) << ',' << num(r.error_temperature_h1) << ','
        << num(r.error_pressure_l2) << '\n';
  }
}

void write_xy(std::ostream& out, const std::vector<std::pair<double, double>>& points) {
  for (const auto& [x, y] : points) out << num(x) << ' ' << num(y) << '\n';
}

void write_offline_logs(const std::string& dir, const OfflineResult& r) {
  namespace fs = std::filesystem;
  const fs::path logs = fs::path(dir) / "logs";
  fs::create_directories(logs);
  auto open = [&](const char* name) {
    std::ofstream f(logs / name, std::ios::trunc);
    if (!f) throw ArtifactError(std::string("cannot write ") + name);
    return f;
  };
  {
    auto f = open("fom_sweep.csv");
    write_sweep_csv(f, r.sweep);
  }
  {
    auto f = open("eim_errors.csv");
    write_eim_csv(f, r.artifact.model.eim);
  }
  {
    auto f = open("greedy_log.csv");
    write_greedy_csv(f, r.greedy_log);
  }
  {
    auto f = open("beta_training.csv");
    write_beta_csv(f, r.beta_training);
  }
  {
    auto f = open("eim_convergence.dat");
    std::vector<std::pair<double, double>> pts;
    const auto& e = r.artifact.model.eim.training_errors;
    for (std::size_t m = 0; m < e.size(); ++m) pts.emplace_back(static_cast<double>(m + 1), e[m]);
    write_xy(f, pts);
  }
  {
    auto f = open("greedy_convergence.dat");
    std::vector<std::pair<double, double>> pts;
    for (const auto& g : r.greedy_log) pts.emplace_back(g.n, g.max_indicator);
    write_xy(f, pts);
  }
  {
    auto f = open("constants.csv");
    const auto& c = r.artifact.constants;
    f << "name,value\n"
      << "sobolev_velocity," << num(c.sobolev_velocity) << '\n'
      << "sobolev_temperature," << num(c.sobolev_temperature) << '\n'
      << "projector_stability," << num(c.projector_stability) << '\n'
      << "poincare," << num(c.poincare) << '\n'
      << "inverse," << num(c.inverse) << '\n'
      << "sup_velocity_gradient," << num(c.sup_velocity_gradient) << '\n'
      << "sup_temperature_gradient," << num(c.sup_temperature_gradient) << '\n'
      << "beta_leave_one_out," << num(r.beta_loo_error) << '\n'
      << "offline_seconds," << num(r.seconds) << '\n';
  }
}

}  // namespace cavityrb

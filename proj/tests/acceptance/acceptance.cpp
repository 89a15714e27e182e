// Desk-scale acceptance run: one PASS/FAIL line per criterion on stdout,
// progress on stderr. Exit status is nonzero when any criterion fails.

#include "pipeline/commands.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace cavityrb;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  std::cerr << "-- criterion " << id << ": " << name << std::endl;
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << v.detail << std::endl;
}

void progress(const std::string& s) { std::cerr << "   " << s << std::endl; }

FESolution difference(const FESolution& a, const FESolution& b) {
  FESolution d = a;
  d.velocity -= b.velocity;
  d.temperature -= b.temperature;
  d.pressure -= b.pressure;
  return d;
}

/// Pi-rotation about the cavity centre on the lexicographic P2 grid, per component block.
Vector rotate(const Vector& v, int side) {
  Vector out(v.size());
  const int n = side * side;
  for (int b = 0; b < v.size() / n; ++b) {
    for (int k = 0; k < n; ++k) out[b * n + k] = v[b * n + (n - 1 - k)];
  }
  return out;
}

double relative_frobenius(const SparseMatrix& a, const SparseMatrix& b) {
  const double nb = b.norm();
  return (a - b).norm() / (nb > 0.0 ? nb : 1.0);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : CAVITYRB_CLI;
  const fs::path scratch = fs::temp_directory_path() / ("cavityrb_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(scratch);

  const RunConfig config;  // the desk defaults
  const FullOrderModel fom(build_uniform_mesh(config.n_h), config.constants());
  const FESpace& space = fom.space();
  const ParameterBox& box = config.box;

  report(1, "conduction exactness", [&] {
    double worst = 0.0;
    double slowest = 0.0;
    for (double g : {0.5, 1.0, 1.37, 2.0}) {
      const auto t0 = Clock::now();
      const FESolution s = solve_fom(fom, {0.0, g}, config.fom());
      slowest = std::max(slowest, since(t0));
      worst = std::max(worst, x_norm(space, s));
    }
    return Verdict{worst < 1e-10 && slowest < 5.0,
                   fmt("max X-norm deviation from (0, 0, 1-x) %.2e over 4 heights, slowest solve %.2f s", worst, slowest)};
  });

  report(2, "affine decomposition oracle", [&] {
    const auto t0 = Clock::now();
    const auto mesh = build_uniform_mesh(config.n_h);
    const AffineOperatorSet set = assemble_affine(FESpace(mesh));
    double worst = 0.0;
    for (double g : {0.5, 1.0, 2.0, 1.37}) {
      const ParameterPoint mu{5.0e3, g};
      const auto a = combine_affine(set, mu, config.prandtl);
      const auto b = assemble_on_original(mesh, mu, config.prandtl);
      for (const auto& [x, y] : {std::pair{&a.velocity_diffusion_x, &b.velocity_diffusion_x},
                                 {&a.velocity_diffusion_y, &b.velocity_diffusion_y},
                                 {&a.divergence_x, &b.divergence_x},
                                 {&a.divergence_y, &b.divergence_y},
                                 {&a.buoyancy, &b.buoyancy},
                                 {&a.temperature_diffusion_x, &b.temperature_diffusion_x},
                                 {&a.temperature_diffusion_y, &b.temperature_diffusion_y},
                                 {&a.lift_convection, &b.lift_convection}}) {
        worst = std::max(worst, relative_frobenius(*x, *y));
      }
    }
    const double seconds = since(t0);
    return Verdict{worst < 1e-12 && seconds < 30.0,
                   fmt("max relative Frobenius mismatch %.2e over 8 blocks x 4 heights, %.1f s", worst, seconds)};
  });

  // Offline run shared by criteria 3 to 8.
  std::cerr << "-- offline run (desk configuration, hash " << hash_hex(config_hash(config)) << ")" << std::endl;
  const fs::path artifact_a = scratch / "run_a";
  const OfflineResult offline = run_offline(config, fom, progress);
  save_artifact(artifact_a.string(), offline.artifact);
  write_offline_logs(artifact_a.string(), offline);
  const ReducedModel& model = offline.artifact.model;
  std::cerr << "   offline finished in " << offline.seconds << " s, N=" << model.size() << " M=" << model.eim.size()
            << std::endl;

  report(3, "EIM invariants", [&] {
    const double eps = 1e-3;
    const auto t0 = Clock::now();
    const EIMApproximation coarse = eim_build(offline.eim_fields, eps, config.m_max);
    const double seconds = offline.sweep_seconds + since(t0);
    const EIMApproximation& fine = model.eim;
    // Exactness at the magic points for every training field.
    double exactness = 0.0;
    for (const EIMApproximation* e : {&coarse, &fine}) {
      for (Eigen::Index j = 0; j < offline.eim_fields.cols(); ++j) {
        const Vector f = offline.eim_fields.col(j);
        const Vector i = e->interpolate(f);
        const double scale = f.lpNorm<Eigen::Infinity>();
        for (int p : e->magic_points) exactness = std::max(exactness, std::abs(i[p] - f[p]) / scale);
      }
    }
    bool monotone = true;
    for (const EIMApproximation* e : {&coarse, &fine}) {
      for (std::size_t m = 1; m < e->training_errors.size(); ++m) {
        monotone = monotone && e->training_errors[m] <= e->training_errors[m - 1];
      }
    }
    const bool nested = coarse.size() <= fine.size() &&
                        std::equal(coarse.magic_points.begin(), coarse.magic_points.end(), fine.magic_points.begin()) &&
                        fine.truncated(coarse.size()).basis == coarse.basis;
    const double final_coarse = coarse.training_errors.back();
    const double final_fine = fine.training_errors.back();
    const bool pass = exactness < 1e-13 && monotone && nested && final_coarse < eps && final_fine < config.eps_eim &&
                      seconds < 600.0;
    return Verdict{pass, fmt("eps=1e-3: M=%g final error %.2e; ", coarse.size(), final_coarse) +
                             fmt("eps=%.0e: M=%g final error %.2e; ", config.eps_eim, fine.size(), final_fine) +
                             fmt("magic-point defect %.1e, ", exactness) + (monotone ? "monotone, " : "NOT monotone, ") +
                             (nested ? "nested, " : "NOT nested, ") +
                             fmt("%.0f s incl. %g snapshots", seconds, static_cast<double>(offline.eim_fields.cols()))};
  });

  report(4, "RB reproduction at greedy points", [&] {
    double worst = 0.0;
    for (const auto& snap : offline.snapshots) {
      const ReducedSolution r = rb_solve(snap.parameter, model, config.newton());
      worst = std::max(worst, x_norm(space, difference(reconstruct(r, model.basis), snap)));
    }
    return Verdict{worst <= 10.0 * config.eps_eim,
                   fmt("max X-norm error %.2e over %g snapshots (limit %.0e)", worst,
                       static_cast<double>(offline.snapshots.size()), 10.0 * config.eps_eim)};
  });

  const auto test_points = random_points(box, 20, config.seed + 1000);
  std::vector<FESolution> truths;

  report(5, "greedy convergence and test accuracy", [&] {
    const double last = offline.greedy_log.back().max_indicator;
    double worst = 0.0;
    for (std::size_t k = 0; k < 10; ++k) {
      truths.push_back(solve_fom(fom, test_points[k], config.fom()));
      const ReducedSolution r = rb_solve(test_points[k], model, config.newton());
      const double err = x_norm(space, difference(reconstruct(r, model.basis), truths.back()));
      worst = std::max(worst, err / x_norm(space, truths.back()));
    }
    const bool pass = last < config.eps_rb && worst < 1e-3 && offline.seconds < 7200.0;
    return Verdict{pass, fmt("N=%g max indicator %.2e; max relative X error at 10 random points %.2e; offline %.0f s",
                             model.size(), last, worst, offline.seconds)};
  });

  std::vector<OnlineRow> certified;
  report(6, "certificate validity with exact beta", [&] {
    int defined = 0;
    int violations = 0;
    std::vector<double> effectivities;
    for (const auto& mu : test_points) {
      OnlineRow row = run_online_point(offline.artifact, mu, &fom, {true, true});
      if (row.status != "ok") return Verdict{false, "online solve failed at Ra=" + std::to_string(mu.rayleigh)};
      if (row.certificate->defined) {
        ++defined;
        if (!(row.true_error <= row.certificate->delta)) ++violations;
        effectivities.push_back(row.effectivity);
      }
      certified.push_back(std::move(row));
    }
    const bool finite = std::all_of(effectivities.begin(), effectivities.end(), [](double e) { return std::isfinite(e); });
    std::ofstream csv(artifact_a / "logs" / "certificates.csv");
    write_online_csv(csv, certified);
    if (defined == 0) return Verdict{false, "no certificate with tau <= 1 among 20 points"};
    const auto [lo, hi] = std::minmax_element(effectivities.begin(), effectivities.end());
    return Verdict{violations == 0 && finite,
                   fmt("%g/20 defined, %g violations; effectivity min %.1f median %.1f ", defined, violations, *lo,
                       median(effectivities)) +
                       fmt("max %.1f", *hi)};
  });

  report(7, "certificate algebra", [&] {
    double worst = 0.0;
    // Reference values in 50-digit arithmetic: 1 - sqrt(1 - tau) cancels badly in double.
    auto check = [&](double eps, double beta, double rho) {
      using Wide = boost::multiprecision::cpp_bin_float_50;
      const ErrorCertificate c = certify(eps, beta, rho);
      const Wide tau = Wide(4) * eps * rho / (Wide(beta) * beta);
      if (tau > 0) worst = std::max(worst, static_cast<double>(abs(c.tau - tau) / tau));
      if (tau <= 1) {
        const Wide delta = Wide(beta) / (2 * Wide(rho)) * (1 - sqrt(1 - tau));
        if (delta > 0) worst = std::max(worst, static_cast<double>(abs(c.delta - delta) / delta));
      }
    };
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
      const double beta = std::pow(10.0, -3.0 + 3.0 * u(rng));
      const double rho = std::pow(10.0, -1.0 + 2.0 * u(rng));
      check(u(rng) * beta * beta / (4.0 * rho), beta, rho);
    }
    for (const auto& row : certified) {
      const auto& c = *row.certificate;
      check(c.epsilon, c.beta, c.rho);
    }
    const ErrorCertificate zero = certify(0.0, 0.2, 3.0);
    const ErrorCertificate edge = certify(0.25 * 0.2 * 0.2 / 3.0, 0.2, 3.0);
    const double edge_error = std::abs(edge.delta - 0.2 / 6.0) / (0.2 / 6.0);
    const bool pass = worst <= 1e-14 && zero.tau == 0.0 && zero.delta == 0.0 && std::abs(edge.tau - 1.0) <= 1e-14 &&
                      edge_error <= 1e-14;
    return Verdict{pass, fmt("max relative recomputation error %.1e over %g certificates; ", worst,
                             1000.0 + static_cast<double>(certified.size())) +
                             fmt("tau=0 gives delta=%g; tau=1 gives delta off beta/(2 rho) by %.1e", zero.delta,
                                 edge_error)};
  });

  report(8, "online speedup", [&] {
    std::vector<BenchmarkRow> rows;
    for (std::size_t k = 0; k < 10; ++k) rows.push_back(run_benchmark_point(offline.artifact, fom, test_points[k]));
    std::ofstream csv(artifact_a / "logs" / "benchmark.csv");
    write_benchmark_csv(csv, rows);
    double slowest = 1e300;
    double worst_error = 0.0;
    std::vector<double> speedups;
    for (const auto& r : rows) {
      slowest = std::min(slowest, r.speedup);
      speedups.push_back(r.speedup);
      worst_error = std::max({worst_error, r.error_velocity_h1, r.error_temperature_h1, r.error_pressure_l2});
    }
    return Verdict{slowest > 1.0, fmt("speedup min %.0f median %.0f over 10 points; max relative error column %.2e",
                                      slowest, median(speedups), worst_error)};
  });

  report(9, "centro-symmetry at Ra=1e4", [&] {
    const FESolution s = solve_fom(fom, {1.0e4, 1.0}, config.fom());
    const int side = space.layout().fine_side();
    FESolution mirrored = s;
    mirrored.velocity = -rotate(s.velocity, side);
    mirrored.temperature = -rotate(s.temperature, side);
    FESolution d = difference(mirrored, s);
    d.pressure.setZero();
    const double defect = x_norm(space, d);
    return Verdict{defect < 1e-6, fmt("X-norm of (u, theta) minus its rotated image %.2e (|u|_inf = %.1f)", defect,
                                      s.velocity.lpNorm<Eigen::Infinity>())};
  });

  report(10, "offline determinism", [&] {
    const fs::path config_file = scratch / "desk.cfg";
    std::ofstream(config_file) << serialize_config(config);
    const fs::path artifact_b = scratch / "run_b";
    const std::string cmd =
        cli + " -q offline -c " + config_file.string() + " -a " + artifact_b.string() + " 2>" + (scratch / "b.log").string();
    std::cerr << "   second offline run through the command line" << std::endl;
    const int status = std::system(cmd.c_str());
    if (status != 0) return Verdict{false, "second offline run exited with status " + std::to_string(status)};
    int files = 0;
    int differing = 0;
    for (const auto& e : fs::directory_iterator(artifact_a / "blobs")) {
      ++files;
      if (slurp(e.path()) != slurp(artifact_b / "blobs" / e.path().filename())) ++differing;
    }
    ++files;
    if (slurp(artifact_a / "manifest.json") != slurp(artifact_b / "manifest.json")) ++differing;
    return Verdict{differing == 0 && files > 1,
                   fmt("%g of %g artifact files differ between two runs", differing, files)};
  });

  std::cout << (10 - failures) << "/10 criteria passed" << std::endl;
  std::error_code ec;
  fs::remove_all(scratch, ec);
  return failures == 0 ? 0 : 1;
}

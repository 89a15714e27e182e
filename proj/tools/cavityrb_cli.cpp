// cavityrb: offline/online pipeline for the parametric-height convection cavity.
//
//   cavityrb init --output run.cfg
//   cavityrb offline --config run.cfg --artifact out/
//   cavityrb online --artifact out/ --mu 2500,1 --mu 7000,1 --truth
//   cavityrb benchmark --artifact out/ --count 5
//   cavityrb export-fields --artifact out/ --mu 4060,1 --output field.vtk

#include "pipeline/commands.hpp"

#include <CLI11.hpp>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

using namespace cavityrb;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3 };

struct Paths {
  std::string config;
  std::string artifact;
};

RunConfig resolve_config(const Paths& p) {
  if (!p.config.empty()) return load_config(p.config);
  return artifact_config(p.artifact);
}

std::vector<ParameterPoint> resolve_points(const std::vector<std::string>& mus, int count, const RunConfig& config,
                                           const ParameterBox& box) {
  std::vector<ParameterPoint> out;
  for (const auto& m : mus) out.push_back(parse_parameter(m));
  if (count > 0) {
    // Offset the stream so test points differ from any offline sampling.
    const auto extra = random_points(box, count, config.seed + 1000);
    out.insert(out.end(), extra.begin(), extra.end());
  }
  if (out.empty()) throw ConfigError("no parameter points given (use --mu or --count)");
  for (const auto& mu : out) {
    if (!box.contains(mu)) {
      throw ConfigError("parameter (Ra=" + std::to_string(mu.rayleigh) + ", height=" + std::to_string(mu.height) +
                        ") lies outside the offline box");
    }
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

int cmd_init(const std::string& output, bool force) {
  const std::string text = "# cavityrb run configuration\n" + serialize_config(RunConfig{});
  if (output.empty() || output == "-") {
    std::cout << text;
    return kOk;
  }
  if (std::filesystem::exists(output) && !force) {
    throw ConfigError("'" + output + "' exists (pass --force to overwrite)");
  }
  auto f = open_output(output);
  f << text;
  spdlog::info("wrote default configuration to {}", output);
  return kOk;
}

int cmd_offline(const Paths& p) {
  if (p.config.empty()) throw ConfigError("offline needs --config");
  const RunConfig config = load_config(p.config);
  std::filesystem::create_directories(p.artifact);
  DirectoryLock lock(p.artifact);
  spdlog::info("offline: config hash {}", hash_hex(config_hash(config)));
  const FullOrderModel fom(build_uniform_mesh(config.n_h), config.constants());
  const OfflineResult r = run_offline(config, fom, [](const std::string& s) { spdlog::info("{}", s); });
  save_artifact(p.artifact, r.artifact);
  write_offline_logs(p.artifact, r);
  spdlog::info("offline: N={} M={} in {:.1f} s", r.artifact.model.size(), r.artifact.model.eim.size(), r.seconds);
  return kOk;
}

struct OnlineArgs {
  std::vector<std::string> mus;
  int count = 0;
  bool truth = false;
  bool exact_beta = false;
  std::string output;
  std::string vtk_dir;
};

int cmd_online(const Paths& p, const OnlineArgs& a) {
  const RunConfig config = resolve_config(p);
  DirectoryLock lock(p.artifact);
  const OfflineArtifact art = load_artifact(p.artifact, config);
  const auto points = resolve_points(a.mus, a.count, config, art.model.box);

  std::unique_ptr<FullOrderModel> fom;
  if (a.truth || a.exact_beta || !a.vtk_dir.empty()) {
    fom = std::make_unique<FullOrderModel>(build_uniform_mesh(config.n_h), config.constants());
  }
  std::vector<OnlineRow> rows;
  for (const auto& mu : points) {
    OnlineRow row = run_online_point(art, mu, fom.get(), {a.truth, a.exact_beta});
    if (row.status != "ok") {
      spdlog::warn("Ra={} height={}: {}", mu.rayleigh, mu.height, row.status);
    } else {
      spdlog::info("Ra={} height={}: {} iterations, delta={:.3e}", mu.rayleigh, mu.height, row.iterations,
                   row.certificate->delta);
    }
    if (!a.vtk_dir.empty() && row.solution) {
      std::filesystem::create_directories(a.vtk_dir);
      auto f = open_output((std::filesystem::path(a.vtk_dir) / ("rb_" + std::to_string(rows.size()) + ".vtk")).string());
      write_vtk_solution(f, fom->space(), reconstruct(*row.solution, art.model.basis));
    }
    rows.push_back(std::move(row));
  }
  if (a.output.empty()) {
    write_online_csv(std::cout, rows);
  } else {
    auto f = open_output(a.output);
    write_online_csv(f, rows);
  }
  return kOk;
}

int cmd_benchmark(const Paths& p, const std::vector<std::string>& mus, int count, const std::string& output) {
  const RunConfig config = resolve_config(p);
  DirectoryLock lock(p.artifact);
  const OfflineArtifact art = load_artifact(p.artifact, config);
  const auto points = resolve_points(mus, count, config, art.model.box);
  const FullOrderModel fom(build_uniform_mesh(config.n_h), config.constants());
  std::vector<BenchmarkRow> rows;
  for (const auto& mu : points) {
    rows.push_back(run_benchmark_point(art, fom, mu));
    const auto& r = rows.back();
    spdlog::info("Ra={} height={}: T_FE={:.3f} s T_online={:.2e} s speedup={:.0f}", mu.rayleigh, mu.height, r.t_fe,
                 r.t_online, r.speedup);
  }
  if (output.empty()) {
    write_benchmark_csv(std::cout, rows);
  } else {
    auto f = open_output(output);
    write_benchmark_csv(f, rows);
  }
  return kOk;
}

int cmd_export(const Paths& p, const std::string& mu_text, const std::string& output, bool full_order) {
  const RunConfig config = resolve_config(p);
  DirectoryLock lock(p.artifact);
  const OfflineArtifact art = load_artifact(p.artifact, config);
  const ParameterPoint mu = resolve_points({mu_text}, 0, config, art.model.box).front();
  const FullOrderModel fom(build_uniform_mesh(config.n_h), config.constants());
  const FESolution s = full_order ? solve_fom(fom, mu, config.fom())
                                  : reconstruct(rb_solve(mu, art.model, config.newton()), art.model.basis);
  auto f = open_output(output);
  write_vtk_solution(f, fom.space(), s);
  spdlog::info("wrote {}", output);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified reduced-basis pipeline for steady convection in a cavity of variable height"};
  app.require_subcommand(1);
  app.fallthrough();
  Paths paths;
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors on stderr");

  std::string init_output;
  bool init_force = false;
  auto* init = app.add_subcommand("init", "Write the default configuration");
  init->add_option("-o,--output", init_output, "Destination (stdout when omitted)");
  init->add_flag("--force", init_force, "Overwrite an existing file");

  auto* offline = app.add_subcommand("offline", "Run the offline stage and write an artifact");
  offline->add_option("-c,--config", paths.config, "Configuration file")->required();
  offline->add_option("-a,--artifact", paths.artifact, "Artifact directory")->required();

  OnlineArgs online_args;
  auto* online = app.add_subcommand("online", "Reduced solves and certificates");
  online->add_option("-c,--config", paths.config, "Configuration file (defaults to the one stored in the artifact)");
  online->add_option("-a,--artifact", paths.artifact, "Artifact directory")->required();
  online->add_option("--mu", online_args.mus, "Parameter point 'Ra,height' (repeatable)");
  online->add_option("--count", online_args.count, "Additional random points in the box")->check(CLI::NonNegativeNumber);
  online->add_flag("--truth", online_args.truth, "Also solve the full-order model and report the true error");
  online->add_flag("--exact-beta", online_args.exact_beta, "Certify with the exact inf-sup constant");
  online->add_option("-o,--output", online_args.output, "CSV destination (stdout when omitted)");
  online->add_option("--vtk-dir", online_args.vtk_dir, "Write reconstructed fields here");

  std::vector<std::string> bench_mus;
  int bench_count = 0;
  std::string bench_output;
  auto* bench = app.add_subcommand("benchmark", "Full-order vs reduced timing and error table");
  bench->add_option("-c,--config", paths.config, "Configuration file (defaults to the one stored in the artifact)");
  bench->add_option("-a,--artifact", paths.artifact, "Artifact directory")->required();
  bench->add_option("--mu", bench_mus, "Parameter point 'Ra,height' (repeatable)");
  bench->add_option("--count", bench_count, "Additional random points in the box")->check(CLI::NonNegativeNumber);
  bench->add_option("-o,--output", bench_output, "CSV destination (stdout when omitted)");

  std::string export_mu;
  std::string export_output;
  bool export_fom = false;
  auto* exp = app.add_subcommand("export-fields", "Write a solution as legacy VTK");
  exp->add_option("-c,--config", paths.config, "Configuration file (defaults to the one stored in the artifact)");
  exp->add_option("-a,--artifact", paths.artifact, "Artifact directory")->required();
  exp->add_option("--mu", export_mu, "Parameter point 'Ra,height'")->required();
  exp->add_option("-o,--output", export_output, "VTK destination")->required();
  exp->add_flag("--fom", export_fom, "Export the full-order solution instead of the reduced one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  // Diagnostics go to stderr so CSV on stdout stays clean.
  spdlog::set_default_logger(spdlog::stderr_color_mt("cavityrb"));
  spdlog::set_pattern("[%H:%M:%S] %v");
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*init) return cmd_init(init_output, init_force);
    if (*offline) return cmd_offline(paths);
    if (*online) return cmd_online(paths, online_args);
    if (*bench) return cmd_benchmark(paths, bench_mus, bench_count, bench_output);
    if (*exp) return cmd_export(paths, export_mu, export_output, export_fom);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const ArtifactError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const LockError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kFailure;
}

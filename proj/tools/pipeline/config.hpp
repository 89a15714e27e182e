#pragma once

#include "cavityrb/fom.hpp"
#include "cavityrb/rb_online.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cavityrb {

/// Every knob of an offline/online run. The text form is `key = value` per line,
/// `#` starts a comment; absent keys keep their defaults, unknown keys are rejected.
struct RunConfig {
  ParameterBox box{1.0e3, 1.0e4, 1.0, 1.0};
  int n_h = 16;

  double dt = 0.01;
  double eps_fe = 1e-10;  // steady-state increment tolerance
  double linear_solver_tol = 1e-10;
  int max_steps = 20000;

  double prandtl = 0.71;
  double smagorinsky = 0.1;

  double eps_eim = 1e-5;
  int m_max = 60;
  double eps_rb = 1e-3;
  int n_max = 25;

  int eim_training_1d = 64;
  int eim_training_2d = 8;  // per side
  int greedy_training_1d = 100;
  int greedy_training_2d = 12;
  int beta_training_1d = 7;
  int beta_training_2d = 5;
  double beta_loo_tol = 0.2;

  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  int inverse_samples = 100;
  std::uint64_t seed = 1;

  [[nodiscard]] PhysicalConstants constants() const { return {prandtl, smagorinsky}; }
  [[nodiscard]] FomConfig fom() const { return {dt, eps_fe, max_steps, linear_solver_tol}; }
  [[nodiscard]] NewtonOptions newton() const { return {newton_tol, newton_max_iter, 5}; }
};

/// Canonical text: every key in a fixed order, doubles with round-trip precision.
std::string serialize_config(const RunConfig& config);
/// Throws ConfigError on syntax errors, unknown keys or invalid values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
/// Throws ConfigError when a tolerance, size or range is invalid.
void validate_config(const RunConfig& config);
/// FNV-1a (64 bit) of the canonical text.
std::uint64_t config_hash(const RunConfig& config);
std::string hash_hex(std::uint64_t hash);

/// Tensor grid over the box: `n_1d` points when one parameter varies, `n_2d`
/// per side when both do, log-spaced in Ra and uniform in the height.
std::vector<ParameterPoint> training_grid(const ParameterBox& box, int n_1d, int n_2d);
/// Uniform random points in the scaled box.
std::vector<ParameterPoint> random_points(const ParameterBox& box, int count, std::uint64_t seed);
/// Parses "Ra,height"; throws ConfigError.
ParameterPoint parse_parameter(const std::string& text);

}  // namespace cavityrb

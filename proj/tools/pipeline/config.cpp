#include "pipeline/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace cavityrb {

namespace {

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

Field real(double RunConfig::*m) {
  return {[m](const RunConfig& c) { return format_double(c.*m); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = to_double(k, v); }};
}

Field box_real(double ParameterBox::*m) {
  return {[m](const RunConfig& c) { return format_double(c.box.*m); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { c.box.*m = to_double(k, v); }};
}

Field integer(int RunConfig::*m) {
  return {[m](const RunConfig& c) { return std::to_string(c.*m); },
          [m](RunConfig& c, const std::string& k, const std::string& v) {
            const long long x = to_integer(k, v);
            if (x < -2147483647LL || x > 2147483647LL) throw ConfigError("config: '" + k + "' out of range");
            c.*m = static_cast<int>(x);
          }};
}

// Key order defines the canonical text.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"ra_min", box_real(&ParameterBox::ra_min)},
      {"ra_max", box_real(&ParameterBox::ra_max)},
      {"height_min", box_real(&ParameterBox::height_min)},
      {"height_max", box_real(&ParameterBox::height_max)},
      {"n_h", integer(&RunConfig::n_h)},
      {"dt", real(&RunConfig::dt)},
      {"eps_fe", real(&RunConfig::eps_fe)},
      {"linear_solver_tol", real(&RunConfig::linear_solver_tol)},
      {"max_steps", integer(&RunConfig::max_steps)},
      {"prandtl", real(&RunConfig::prandtl)},
      {"smagorinsky", real(&RunConfig::smagorinsky)},
      {"eps_eim", real(&RunConfig::eps_eim)},
      {"m_max", integer(&RunConfig::m_max)},
      {"eps_rb", real(&RunConfig::eps_rb)},
      {"n_max", integer(&RunConfig::n_max)},
      {"eim_training_1d", integer(&RunConfig::eim_training_1d)},
      {"eim_training_2d", integer(&RunConfig::eim_training_2d)},
      {"greedy_training_1d", integer(&RunConfig::greedy_training_1d)},
      {"greedy_training_2d", integer(&RunConfig::greedy_training_2d)},
      {"beta_training_1d", integer(&RunConfig::beta_training_1d)},
      {"beta_training_2d", integer(&RunConfig::beta_training_2d)},
      {"beta_loo_tol", real(&RunConfig::beta_loo_tol)},
      {"newton_tol", real(&RunConfig::newton_tol)},
      {"newton_max_iter", integer(&RunConfig::newton_max_iter)},
      {"inverse_samples", integer(&RunConfig::inverse_samples)},
      {"seed", {[](const RunConfig& c) { return std::to_string(c.seed); },
                [](RunConfig& c, const std::string& k, const std::string& v) {
                  std::uint64_t out = 0;
                  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
                  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
                    throw ConfigError("config: '" + k + "' expects a non-negative integer");
                  }
                  c.seed = out;
                }}},
  };
  return f;
}

}  // namespace

std::string serialize_config(const RunConfig& config) {
  std::ostringstream out;
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(config) << "\n";
  return out.str();
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::map<std::string, const Field*> index;
  for (const auto& [key, field] : fields()) index[key] = &field;
  std::string line;
  int number = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    if (seen.count(key) != 0) throw ConfigError("config line " + std::to_string(number) + ": duplicate key '" + key + "'");
    seen[key] = number;
    it->second->set(config, key, value);
  }
  validate_config(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void validate_config(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  const auto& b = c.box;
  require(std::isfinite(b.ra_min) && std::isfinite(b.ra_max) && b.ra_min > 0.0 && b.ra_min <= b.ra_max,
          "Rayleigh range must satisfy 0 < ra_min <= ra_max");
  require(std::isfinite(b.height_min) && std::isfinite(b.height_max) && b.height_min > 0.0 &&
              b.height_min <= b.height_max,
          "height range must satisfy 0 < height_min <= height_max");
  require(c.n_h >= 2, "n_h must be at least 2");
  require(c.dt > 0.0, "dt must be positive");
  require(c.eps_fe > 0.0, "eps_fe must be positive");
  require(c.linear_solver_tol > 0.0, "linear_solver_tol must be positive");
  require(c.max_steps > 0, "max_steps must be positive");
  require(c.prandtl > 0.0, "prandtl must be positive");
  require(c.smagorinsky >= 0.0, "smagorinsky must be non-negative");
  require(c.eps_eim > 0.0, "eps_eim must be positive");
  require(c.m_max > 0, "m_max must be positive");
  require(c.eps_rb > 0.0, "eps_rb must be positive");
  require(c.n_max > 0, "n_max must be positive");
  require(c.eim_training_1d >= 2 && c.eim_training_2d >= 2, "EIM training sizes must be at least 2");
  require(c.greedy_training_1d >= 2 && c.greedy_training_2d >= 2, "greedy training sizes must be at least 2");
  require(c.beta_training_1d >= 4 && c.beta_training_2d >= 2, "beta training needs at least 4 points");
  require(c.beta_loo_tol > 0.0, "beta_loo_tol must be positive");
  require(c.newton_tol > 0.0 && c.newton_max_iter > 0, "Newton controls must be positive");
  require(c.inverse_samples > 0, "inverse_samples must be positive");
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

namespace {

std::vector<double> log_space(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out[i] = std::pow(10.0, (1.0 - t) * std::log10(a) + t * std::log10(b));
  }
  out.front() = a;
  out.back() = b;
  return out;
}

std::vector<double> lin_space(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out[i] = (1.0 - t) * a + t * b;
  }
  out.back() = b;
  return out;
}

}  // namespace

std::vector<ParameterPoint> training_grid(const ParameterBox& box, int n_1d, int n_2d) {
  const bool ra_fixed = box.rayleigh_fixed();
  const bool g_fixed = box.height_fixed();
  if (ra_fixed && g_fixed) return {ParameterPoint{box.ra_min, box.height_min}};
  const std::vector<double> ra =
      ra_fixed ? std::vector<double>{box.ra_min} : log_space(box.ra_min, box.ra_max, g_fixed ? n_1d : n_2d);
  const std::vector<double> g =
      g_fixed ? std::vector<double>{box.height_min} : lin_space(box.height_min, box.height_max, ra_fixed ? n_1d : n_2d);
  std::vector<ParameterPoint> out;
  for (double h : g) {
    for (double r : ra) out.push_back({r, h});
  }
  return out;
}

std::vector<ParameterPoint> random_points(const ParameterBox& box, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ParameterPoint> out;
  for (int i = 0; i < count; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    ParameterPoint p;
    p.rayleigh = std::pow(10.0, (1.0 - a) * std::log10(box.ra_min) + a * std::log10(box.ra_max));
    p.height = (1.0 - b) * box.height_min + b * box.height_max;
    out.push_back(p);
  }
  return out;
}

ParameterPoint parse_parameter(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("parameter '" + text + "' must be 'Ra,height'");
  ParameterPoint p;
  p.rayleigh = to_double("Ra", trim(text.substr(0, comma)));
  p.height = to_double("height", trim(text.substr(comma + 1)));
  return p;
}

}  // namespace cavityrb

#include "pipeline/artifact.hpp"

#include <json.hpp>

#include <bit>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace cavityrb {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'R', 'B', 'B', 'L', 'O', 'B', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw ArtifactError("blob: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

void write_blob(const std::string& path, const Blob& blob) {
  if (element_count(blob.shape) != blob.data.size()) throw InvalidArgument("write_blob: shape does not match data");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint64_t>(out, blob.shape.size());
  for (auto d : blob.shape) put_le<std::uint64_t>(out, d);
  for (double v : blob.data) put_le<double>(out, v);
  if (!out) throw ArtifactError("write failed for '" + path + "'");
}

Blob read_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ArtifactError("'" + path + "' is not a blob file");
  Blob b;
  const auto ndim = get_le<std::uint64_t>(in);
  if (ndim > 8) throw ArtifactError("'" + path + "': implausible rank");
  for (std::uint64_t i = 0; i < ndim; ++i) b.shape.push_back(get_le<std::uint64_t>(in));
  const std::uint64_t n = element_count(b.shape);
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (static_cast<std::uint64_t>(end - here) != n * sizeof(double)) {
    throw ArtifactError("'" + path + "': payload size does not match the shape header");
  }
  b.data.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) b.data[i] = get_le<double>(in);
  return b;
}

Blob to_blob(const Matrix& m) {
  Blob b;
  b.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  b.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) b.data.push_back(m(i, j));
  }
  return b;
}

Blob to_blob(const Vector& v) {
  Blob b;
  b.shape = {static_cast<std::uint64_t>(v.size())};
  b.data.assign(v.data(), v.data() + v.size());
  return b;
}

Blob to_blob(const std::vector<Matrix>& stack) {
  Blob b;
  const std::uint64_t r = stack.empty() ? 0 : static_cast<std::uint64_t>(stack[0].rows());
  const std::uint64_t c = stack.empty() ? 0 : static_cast<std::uint64_t>(stack[0].cols());
  b.shape = {stack.size(), r, c};
  for (const auto& m : stack) {
    if (static_cast<std::uint64_t>(m.rows()) != r || static_cast<std::uint64_t>(m.cols()) != c) {
      throw InvalidArgument("to_blob: ragged matrix stack");
    }
    const Blob s = to_blob(m);
    b.data.insert(b.data.end(), s.data.begin(), s.data.end());
  }
  return b;
}

Matrix blob_matrix(const Blob& b) {
  if (b.shape.size() != 2) throw ArtifactError("blob: expected a matrix");
  Matrix m(static_cast<Eigen::Index>(b.shape[0]), static_cast<Eigen::Index>(b.shape[1]));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = b.data[k++];
  }
  return m;
}

Vector blob_vector(const Blob& b) {
  if (b.shape.size() != 1) throw ArtifactError("blob: expected a vector");
  return Eigen::Map<const Vector>(b.data.data(), static_cast<Eigen::Index>(b.data.size()));
}

std::vector<Matrix> blob_stack(const Blob& b) {
  if (b.shape.size() != 3) throw ArtifactError("blob: expected a matrix stack");
  std::vector<Matrix> out;
  const std::size_t slice = static_cast<std::size_t>(b.shape[1] * b.shape[2]);
  for (std::uint64_t s = 0; s < b.shape[0]; ++s) {
    Blob one;
    one.shape = {b.shape[1], b.shape[2]};
    one.data.assign(b.data.begin() + static_cast<std::ptrdiff_t>(s * slice),
                    b.data.begin() + static_cast<std::ptrdiff_t>((s + 1) * slice));
    out.push_back(blob_matrix(one));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const char* kBlockNames[3] = {"momentum", "continuity", "energy"};

Blob components_blob(const std::vector<ResidualComponent>& comps) {
  Blob b;
  b.shape = {comps.size(), 3};
  for (const auto& c : comps) {
    b.data.push_back(static_cast<double>(static_cast<int>(c.term)));
    b.data.push_back(c.first);
    b.data.push_back(c.second);
  }
  return b;
}

std::vector<ResidualComponent> blob_components(const Blob& b) {
  if (b.shape.size() != 2 || (b.shape[0] > 0 && b.shape[1] != 3)) throw ArtifactError("blob: malformed residual components");
  std::vector<ResidualComponent> out;
  const int last = static_cast<int>(ResidualTerm::eddy_temperature_y);
  for (std::uint64_t i = 0; i < b.shape[0]; ++i) {
    const int term = static_cast<int>(b.data[3 * i]);
    if (term < 0 || term > last) throw ArtifactError("blob: unknown residual term");
    out.push_back({static_cast<ResidualTerm>(term), static_cast<int>(b.data[3 * i + 1]),
                   static_cast<int>(b.data[3 * i + 2])});
  }
  return out;
}

std::map<std::string, Blob> collect_blobs(const OfflineArtifact& a) {
  const auto& m = a.model;
  const auto& o = m.operators;
  std::map<std::string, Blob> b;
  b["basis_velocity"] = to_blob(m.basis.velocity);
  b["basis_temperature"] = to_blob(m.basis.temperature);
  b["basis_pressure"] = to_blob(m.basis.pressure);
  Matrix params(static_cast<Eigen::Index>(m.basis.parameters.size()), 2);
  for (std::size_t i = 0; i < m.basis.parameters.size(); ++i) {
    params(static_cast<Eigen::Index>(i), 0) = m.basis.parameters[i].rayleigh;
    params(static_cast<Eigen::Index>(i), 1) = m.basis.parameters[i].height;
  }
  b["basis_parameters"] = to_blob(params);
  b["velocity_diffusion_x"] = to_blob(o.velocity_diffusion_x);
  b["velocity_diffusion_y"] = to_blob(o.velocity_diffusion_y);
  b["divergence_x"] = to_blob(o.divergence_x);
  b["divergence_y"] = to_blob(o.divergence_y);
  b["buoyancy"] = to_blob(o.buoyancy);
  b["buoyancy_lift"] = to_blob(o.buoyancy_lift);
  b["temperature_diffusion_x"] = to_blob(o.temperature_diffusion_x);
  b["temperature_diffusion_y"] = to_blob(o.temperature_diffusion_y);
  b["temperature_diffusion_lift_x"] = to_blob(o.temperature_diffusion_lift_x);
  b["temperature_diffusion_lift_y"] = to_blob(o.temperature_diffusion_lift_y);
  b["lift_convection"] = to_blob(o.lift_convection);
  b["convection_velocity_x"] = to_blob(o.convection_velocity_x);
  b["convection_velocity_y"] = to_blob(o.convection_velocity_y);
  b["convection_temperature_x"] = to_blob(o.convection_temperature_x);
  b["convection_temperature_y"] = to_blob(o.convection_temperature_y);
  b["eddy_velocity_x"] = to_blob(o.eddy_velocity_x);
  b["eddy_velocity_y"] = to_blob(o.eddy_velocity_y);
  b["eddy_temperature_x"] = to_blob(o.eddy_temperature_x);
  b["eddy_temperature_y"] = to_blob(o.eddy_temperature_y);
  b["magic_gradients"] = to_blob(std::vector<Matrix>(o.magic_gradients.begin(), o.magic_gradients.end()));
  for (int k = 0; k < 3; ++k) {
    b[std::string("riesz_factor_") + kBlockNames[k]] = to_blob(m.riesz.factors[k]);
    b[std::string("riesz_components_") + kBlockNames[k]] = components_blob(m.riesz.components[k]);
  }
  b["eim_basis"] = to_blob(m.eim.basis);
  Vector magic(m.eim.size());
  for (int i = 0; i < m.eim.size(); ++i) magic[i] = m.eim.magic_points[i];
  b["eim_magic_points"] = to_blob(magic);
  b["eim_interpolation"] = to_blob(m.eim.interpolation);
  b["eim_training_errors"] =
      to_blob(Vector(Eigen::Map<const Vector>(m.eim.training_errors.data(), static_cast<Eigen::Index>(m.eim.training_errors.size()))));
  Matrix coords(static_cast<Eigen::Index>(m.snapshot_coordinates.size()), 4 * m.size());
  for (std::size_t i = 0; i < m.snapshot_coordinates.size(); ++i) coords.row(static_cast<Eigen::Index>(i)) = m.snapshot_coordinates[i];
  b["snapshot_coordinates"] = to_blob(coords);
  const auto& s = a.surrogate;
  Matrix nodes(static_cast<Eigen::Index>(s.nodes().size()), 2);
  Vector values(static_cast<Eigen::Index>(s.values().size()));
  for (std::size_t i = 0; i < s.nodes().size(); ++i) {
    nodes(static_cast<Eigen::Index>(i), 0) = s.nodes()[i].rayleigh;
    nodes(static_cast<Eigen::Index>(i), 1) = s.nodes()[i].height;
    values[static_cast<Eigen::Index>(i)] = s.values()[i];
  }
  b["beta_nodes"] = to_blob(nodes);
  b["beta_values"] = to_blob(values);
  b["beta_weights"] = to_blob(s.weights());
  const auto& c = a.constants;
  Vector cv(9);
  cv << c.sobolev_velocity, c.sobolev_temperature, c.projector_stability, c.poincare, c.inverse, c.smagorinsky,
      static_cast<double>(c.n_h), c.sup_velocity_gradient, c.sup_temperature_gradient;
  b["certification_constants"] = to_blob(cv);
  return b;
}

}  // namespace

void save_artifact(const std::string& dir, const OfflineArtifact& a) {
  const fs::path root(dir);
  fs::create_directories(root / "blobs");
  const auto blobs = collect_blobs(a);
  json manifest;
  manifest["format"] = "cavityrb-offline";
  manifest["version"] = kManifestVersion;
  manifest["config_hash"] = hash_hex(config_hash(a.config));
  manifest["config"] = serialize_config(a.config);
  const int n_h = a.config.n_h;
  manifest["mesh"] = {{"divisions", n_h},
                      {"vertices", (n_h + 1) * (n_h + 1)},
                      {"triangles", 2 * n_h * n_h},
                      {"p2_nodes", (2 * n_h + 1) * (2 * n_h + 1)},
                      {"quadrature_points", 12 * n_h * n_h}};
  manifest["dimensions"] = {{"N", a.model.size()}, {"M", a.model.eim.size()}};
  json entries = json::object();
  for (const auto& [name, blob] : blobs) {
    const std::string file = "blobs/" + name + ".bin";
    write_blob((root / file).string(), blob);
    entries[name] = {{"file", file}, {"shape", blob.shape}};
  }
  manifest["blobs"] = entries;
  std::ofstream out(root / "manifest.json", std::ios::trunc);
  if (!out) throw ArtifactError("cannot write manifest in '" + dir + "'");
  out << manifest.dump(2) << "\n";
  if (!out) throw ArtifactError("manifest write failed in '" + dir + "'");
}

RunConfig artifact_config(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw ArtifactError("no manifest.json in '" + dir + "'");
  try {
    std::istringstream text(json::parse(in).at("config").get<std::string>());
    return parse_config(text);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw ArtifactError(std::string("stored config: ") + e.what());
  }
}

OfflineArtifact load_artifact(const std::string& dir, const RunConfig& expected) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw ArtifactError("no manifest.json in '" + dir + "'");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("malformed manifest: ") + e.what());
  }
  try {
    if (manifest.value("format", "") != "cavityrb-offline") throw ArtifactError("not an offline artifact");
    const int version = manifest.at("version").get<int>();
    if (version != kManifestVersion) {
      throw ArtifactError("unsupported manifest version " + std::to_string(version) + " (this build reads version " +
                          std::to_string(kManifestVersion) + ")");
    }
    const std::string want = hash_hex(config_hash(expected));
    const std::string have = manifest.at("config_hash").get<std::string>();
    if (want != have) {
      throw ArtifactError("config hash mismatch: artifact was built with " + have + ", current config hashes to " + want);
    }
    if (manifest.at("mesh").at("divisions").get<int>() != expected.n_h) throw ArtifactError("mesh descriptor mismatch");

    std::map<std::string, Blob> blobs;
    for (const auto& [name, entry] : manifest.at("blobs").items()) {
      Blob b = read_blob((root / entry.at("file").get<std::string>()).string());
      if (b.shape != entry.at("shape").get<std::vector<std::uint64_t>>()) {
        throw ArtifactError("blob '" + name + "' shape differs from the manifest");
      }
      blobs[name] = std::move(b);
    }
    auto get = [&](const std::string& name) -> const Blob& {
      const auto it = blobs.find(name);
      if (it == blobs.end()) throw ArtifactError("missing blob '" + name + "'");
      return it->second;
    };

    OfflineArtifact a;
    a.config = expected;
    ReducedModel& m = a.model;
    m.box = expected.box;
    m.constants = expected.constants();
    m.n_h = expected.n_h;
    m.basis.velocity = blob_matrix(get("basis_velocity"));
    m.basis.temperature = blob_matrix(get("basis_temperature"));
    m.basis.pressure = blob_matrix(get("basis_pressure"));
    const Matrix params = blob_matrix(get("basis_parameters"));
    for (Eigen::Index i = 0; i < params.rows(); ++i) m.basis.parameters.push_back({params(i, 0), params(i, 1)});
    auto& o = m.operators;
    o.velocity_diffusion_x = blob_matrix(get("velocity_diffusion_x"));
    o.velocity_diffusion_y = blob_matrix(get("velocity_diffusion_y"));
    o.divergence_x = blob_matrix(get("divergence_x"));
    o.divergence_y = blob_matrix(get("divergence_y"));
    o.buoyancy = blob_matrix(get("buoyancy"));
    o.buoyancy_lift = blob_vector(get("buoyancy_lift"));
    o.temperature_diffusion_x = blob_matrix(get("temperature_diffusion_x"));
    o.temperature_diffusion_y = blob_matrix(get("temperature_diffusion_y"));
    o.temperature_diffusion_lift_x = blob_vector(get("temperature_diffusion_lift_x"));
    o.temperature_diffusion_lift_y = blob_vector(get("temperature_diffusion_lift_y"));
    o.lift_convection = blob_matrix(get("lift_convection"));
    o.convection_velocity_x = blob_stack(get("convection_velocity_x"));
    o.convection_velocity_y = blob_stack(get("convection_velocity_y"));
    o.convection_temperature_x = blob_stack(get("convection_temperature_x"));
    o.convection_temperature_y = blob_stack(get("convection_temperature_y"));
    o.eddy_velocity_x = blob_stack(get("eddy_velocity_x"));
    o.eddy_velocity_y = blob_stack(get("eddy_velocity_y"));
    o.eddy_temperature_x = blob_stack(get("eddy_temperature_x"));
    o.eddy_temperature_y = blob_stack(get("eddy_temperature_y"));
    const auto grads = blob_stack(get("magic_gradients"));
    if (grads.size() != 4) throw ArtifactError("magic_gradients must hold 4 matrices");
    for (int k = 0; k < 4; ++k) o.magic_gradients[k] = grads[k];
    for (int k = 0; k < 3; ++k) {
      m.riesz.factors[k] = blob_matrix(get(std::string("riesz_factor_") + kBlockNames[k]));
      m.riesz.components[k] = blob_components(get(std::string("riesz_components_") + kBlockNames[k]));
      if (m.riesz.factors[k].cols() != static_cast<Eigen::Index>(m.riesz.components[k].size())) {
        throw ArtifactError("residual factor and component list disagree");
      }
    }
    m.eim.basis = blob_matrix(get("eim_basis"));
    const Vector magic = blob_vector(get("eim_magic_points"));
    for (Eigen::Index i = 0; i < magic.size(); ++i) m.eim.magic_points.push_back(static_cast<int>(magic[i]));
    m.eim.interpolation = blob_matrix(get("eim_interpolation"));
    const Vector errs = blob_vector(get("eim_training_errors"));
    m.eim.training_errors.assign(errs.data(), errs.data() + errs.size());
    const Matrix coords = blob_matrix(get("snapshot_coordinates"));
    for (Eigen::Index i = 0; i < coords.rows(); ++i) m.snapshot_coordinates.push_back(coords.row(i).transpose());

    const Matrix nodes = blob_matrix(get("beta_nodes"));
    const Vector values = blob_vector(get("beta_values"));
    std::vector<ParameterPoint> bn;
    for (Eigen::Index i = 0; i < nodes.rows(); ++i) bn.push_back({nodes(i, 0), nodes(i, 1)});
    a.surrogate = BetaSurrogate(expected.box, bn, std::vector<double>(values.data(), values.data() + values.size()));
    const Vector cv = blob_vector(get("certification_constants"));
    if (cv.size() != 9) throw ArtifactError("certification_constants must hold 9 values");
    auto& c = a.constants;
    c.sobolev_velocity = cv[0];
    c.sobolev_temperature = cv[1];
    c.projector_stability = cv[2];
    c.poincare = cv[3];
    c.inverse = cv[4];
    c.smagorinsky = cv[5];
    c.n_h = static_cast<int>(cv[6]);
    c.sup_velocity_gradient = cv[7];
    c.sup_temperature_gradient = cv[8];

    // Dimension checks against the manifest.
    const int n = manifest.at("dimensions").at("N").get<int>();
    const int mm = manifest.at("dimensions").at("M").get<int>();
    const int n2 = (2 * expected.n_h + 1) * (2 * expected.n_h + 1);
    const bool ok = m.size() == n && m.basis.velocity.cols() == 2 * n && m.basis.temperature.cols() == n &&
                    m.basis.velocity.rows() == 2 * n2 && m.basis.temperature.rows() == n2 &&
                    static_cast<int>(m.basis.parameters.size()) == n && m.eim.size() == mm &&
                    m.eim.interpolation.rows() == mm && o.velocity_diffusion_x.rows() == 2 * n &&
                    static_cast<int>(o.convection_velocity_x.size()) == 2 * n &&
                    static_cast<int>(o.eddy_velocity_x.size()) == mm && o.magic_gradients[0].rows() == mm &&
                    static_cast<int>(m.snapshot_coordinates.size()) == n;
    if (!ok) throw ArtifactError("blob shapes are inconsistent with the manifest dimensions");
    return a;
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("malformed manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

DirectoryLock::DirectoryLock(const std::string& dir) {
  fs::create_directories(dir);
  path_ = (fs::path(dir) / ".lock").string();
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      const ssize_t written = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      if (written != static_cast<ssize_t>(pid.size())) throw LockError("cannot write lock file '" + path_ + "'");
      return;
    }
    if (errno != EEXIST) throw LockError("cannot create lock file '" + path_ + "': " + std::strerror(errno));
    std::ifstream in(path_);
    long long owner = 0;
    in >> owner;
    const bool stale = owner <= 0 || (::kill(static_cast<pid_t>(owner), 0) != 0 && errno == ESRCH);
    if (!stale) {
      throw LockError("artifact directory '" + dir + "' is locked by process " + std::to_string(owner));
    }
    fs::remove(path_);
  }
  throw LockError("cannot acquire lock on '" + dir + "'");
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace cavityrb

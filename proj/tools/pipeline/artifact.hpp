#pragma once

#include "cavityrb/certification.hpp"
#include "cavityrb/rb_online.hpp"
#include "pipeline/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cavityrb {

inline constexpr int kManifestVersion = 1;

/// Dense array with explicit shape; data is row-major.
struct Blob {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
};

/// File layout: "CRBBLOB1", uint64 ndim, uint64 dims[ndim], float64 data; all little-endian.
void write_blob(const std::string& path, const Blob& blob);
Blob read_blob(const std::string& path);

Blob to_blob(const Matrix& m);
Blob to_blob(const Vector& v);
Blob to_blob(const std::vector<Matrix>& stack);  // shape (k, rows, cols)
Matrix blob_matrix(const Blob& b);
Vector blob_vector(const Blob& b);
std::vector<Matrix> blob_stack(const Blob& b);

/// Everything the online stage reads back.
struct OfflineArtifact {
  RunConfig config;
  ReducedModel model;
  CertificationConstants constants;
  BetaSurrogate surrogate;
};

/// Writes manifest.json and blobs/ under dir (created if needed).
void save_artifact(const std::string& dir, const OfflineArtifact& artifact);
/// Throws ArtifactError on a missing or malformed artifact, an unknown manifest
/// version, a config-hash mismatch with `expected`, or inconsistent shapes.
OfflineArtifact load_artifact(const std::string& dir, const RunConfig& expected);

/// The config recorded in an artifact's manifest.
RunConfig artifact_config(const std::string& dir);

/// Exclusive lock on an artifact directory for the lifetime of the object.
/// A lock left by a process that no longer exists is taken over.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::string& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::string path_;
};

class LockError : public Error {
 public:
  using Error::Error;
};

}  // namespace cavityrb

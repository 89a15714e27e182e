#include "cavityrb/eim.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cavityrb {

namespace {

// Index of the largest |v_i|, lowest index on ties.
Eigen::Index argmax_abs(const Vector& v) {
  Eigen::Index best = 0;
  double best_value = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best_value) {
      best_value = std::abs(v[i]);
      best = i;
    }
  }
  return best;
}

}  // namespace

Vector EIMApproximation::coefficients(const Vector& values) const {
  if (values.size() != size()) throw InvalidArgument("EIM: expected one value per magic point");
  if (size() == 0) return Vector();
  return interpolation.triangularView<Eigen::UnitLower>().solve(values);
}

Vector eim_coefficients(const EIMApproximation& eim, const Vector& values) {
  return eim.coefficients(values);
}

Vector EIMApproximation::expand(const Vector& sigma) const {
  if (size() == 0) return Vector::Zero(basis.rows());
  return basis * sigma;
}

Vector EIMApproximation::interpolate(const Vector& field) const {
  Vector values(size());
  for (int i = 0; i < size(); ++i) values[i] = field[magic_points[i]];
  return expand(coefficients(values));
}

EIMApproximation EIMApproximation::truncated(int m) const {
  if (m < 0 || m > size()) throw InvalidArgument("EIM: truncation size out of range");
  EIMApproximation out;
  out.basis = basis.leftCols(m);
  out.magic_points.assign(magic_points.begin(), magic_points.begin() + m);
  out.interpolation = interpolation.topLeftCorner(m, m);
  out.training_errors.assign(training_errors.begin(), training_errors.begin() + m);
  return out;
}

EIMApproximation eim_build(const Matrix& snapshots, double tol, int max_m) {
  if (snapshots.cols() == 0 || snapshots.rows() == 0) {
    throw InvalidArgument("eim_build: empty training set");
  }
  if (!(tol > 0.0) || max_m < 1) throw InvalidArgument("eim_build: tol and max_m must be positive");

  const Eigen::Index n_fields = snapshots.cols();
  Vector scale(n_fields);
  for (Eigen::Index j = 0; j < n_fields; ++j) scale[j] = snapshots.col(j).cwiseAbs().maxCoeff();

  EIMApproximation eim;
  eim.basis.resize(snapshots.rows(), 0);
  eim.interpolation.resize(0, 0);
  Matrix residual = snapshots;

  while (eim.size() < max_m) {
    // Pick the field with the largest relative sup-norm residual.
    Eigen::Index pick = -1;
    double worst = -1.0;
    for (Eigen::Index j = 0; j < n_fields; ++j) {
      if (scale[j] <= 0.0) continue;
      const double err = residual.col(j).cwiseAbs().maxCoeff() / scale[j];
      if (err > worst) {
        worst = err;
        pick = j;
      }
    }
    if (pick < 0) throw DegenerateSnapshot("eim_build: every training field vanishes");
    const Vector r = residual.col(pick);
    const Eigen::Index point = argmax_abs(r);
    if (std::abs(r[point]) <= 64.0 * std::numeric_limits<double>::epsilon() * scale[pick]) {
      throw DegenerateSnapshot("eim_build: selected residual vanishes at M=" + std::to_string(eim.size()) +
                               " before reaching tolerance");
    }
    const Vector q = r / r[point];
    const int m = eim.size();
    eim.basis.conservativeResize(Eigen::NoChange, m + 1);
    eim.basis.col(m) = q;
    eim.magic_points.push_back(static_cast<int>(point));
    eim.interpolation.conservativeResize(m + 1, m + 1);
    for (int i = 0; i <= m; ++i) {
      eim.interpolation(i, m) = q[eim.magic_points[i]];
      eim.interpolation(m, i) = eim.basis(point, i);
    }
    // Enforce the exact structure: unit diagonal and zeros above it.
    eim.interpolation(m, m) = 1.0;
    for (int i = 0; i < m; ++i) eim.interpolation(i, m) = 0.0;

    // Updating residuals with the new term keeps every field interpolated by the
    // current basis: r_j <- r_j - r_j(x_m) q.
    double max_err = 0.0;
    for (Eigen::Index j = 0; j < n_fields; ++j) {
      residual.col(j) -= residual(point, j) * q;
      if (scale[j] > 0.0) max_err = std::max(max_err, residual.col(j).cwiseAbs().maxCoeff() / scale[j]);
    }
    eim.training_errors.push_back(max_err);
    if (max_err < tol) break;
  }
  return eim;
}

EIMApproximation eim_build(const FieldProvider& provider, const std::vector<ParameterPoint>& training,
                           double tol, int max_m) {
  if (training.empty()) throw InvalidArgument("eim_build: empty training set");
  Matrix snaps;
  for (std::size_t j = 0; j < training.size(); ++j) {
    const Vector f = provider(training[j]);
    if (j == 0) snaps.resize(f.size(), static_cast<Eigen::Index>(training.size()));
    snaps.col(static_cast<Eigen::Index>(j)) = f;
  }
  return eim_build(snaps, tol, max_m);
}

}  // namespace cavityrb

#include "cavityrb/certification.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace cavityrb {

namespace {

SparseMatrix restrict_matrix(const SparseMatrix& full, const std::vector<int>& map, int size) {
  std::vector<Triplet> t;
  scatter_block(t, full, 1.0, &map, 0, &map, 0);
  SparseMatrix out(size, size);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

// Interior (homogeneous Dirichlet) index map of one velocity component.
std::vector<int> scalar_velocity_map(const DofLayout& dofs, int* count) {
  std::vector<int> map(dofs.num_p2(), -1);
  int n = 0;
  for (int i = 0; i < dofs.num_p2(); ++i) {
    if (dofs.velocity_free_index(i) >= 0) map[i] = n++;
  }
  *count = n;
  return map;
}

Vector extend(const Vector& free, const std::vector<int>& map) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] >= 0) out[static_cast<Eigen::Index>(i)] = free[map[i]];
  }
  return out;
}

Vector restrict_vector(const Vector& full, const std::vector<int>& map, int size) {
  Vector out(size);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] >= 0) out[map[i]] = full[static_cast<Eigen::Index>(i)];
  }
  return out;
}

}  // namespace

double sobolev_constant(const FESpace& space, bool vector_valued, const SobolevOptions& options) {
  const auto& dofs = space.layout();
  const int n2 = dofs.num_p2();
  int scalar_count = 0;
  std::vector<int> map;
  if (vector_valued) {
    map = scalar_velocity_map(dofs, &scalar_count);
  } else {
    map = dofs.temperature_free_map();
    scalar_count = static_cast<int>(dofs.temperature_free().size());
  }
  const SparseMatrix k = restrict_matrix(space.stiffness(), map, scalar_count);
  Eigen::SimplicialLLT<SparseMatrix> chol(k);
  if (chol.info() != Eigen::Success) throw LinearSolveFailure("sobolev_constant: stiffness not SPD");
  const Vector& w = space.quadrature_weights();
  const int comps = vector_valued ? 2 : 1;

  std::vector<Vector> v(comps);
  v[0] = restrict_vector(space.interpolate_p2([](double x, double y) { return x * (1 - x) * (1 + 0.3 * y) * (0.2 + y); }),
                         map, scalar_count);
  if (comps == 2) {
    v[1] = restrict_vector(space.interpolate_p2([](double x, double y) { return 0.5 * x * (1 - x) * y * (1 - y) * (1 + x); }),
                           map, scalar_count);
  }
  auto normalize = [&]() {
    double g = 0.0;
    for (const auto& c : v) g += c.dot(k * c);
    const double s = 1.0 / std::sqrt(g);
    for (auto& c : v) c *= s;
  };
  normalize();
  double previous = 0.0;
  for (int it = 0; it < options.max_iter; ++it) {
    std::vector<Vector> values(comps);
    Vector sq = Vector::Zero(w.size());
    for (int c = 0; c < comps; ++c) {
      values[c] = space.evaluate(extend(v[c], map)).value;
      sq += values[c].cwiseAbs2();
    }
    const double l4 = std::pow(w.dot(sq.cwiseAbs2()), 0.25);
    if (it > 0 && std::abs(l4 - previous) < options.tol * l4) return l4;
    previous = l4;
    for (int c = 0; c < comps; ++c) {
      const Vector rhs = integrate_against_p2(space, w.cwiseProduct(sq).cwiseProduct(values[c]));
      v[c] = chol.solve(restrict_vector(rhs, map, scalar_count));
    }
    normalize();
  }
  (void)n2;
  throw NonConvergence("sobolev_constant: fixed point did not converge", previous);
}

double lanczos_largest(const std::function<Vector(const Vector&)>& op, const SparseMatrix& gram, int size,
                       const LanczosOptions& options, const std::function<Vector(const Vector&)>& project) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector q(size);
  for (int i = 0; i < size; ++i) q[i] = dist(rng);
  if (project) q = project(q);
  const int max_k = std::min(options.max_iter, size);
  Matrix basis(size, max_k);
  Matrix gram_basis(size, max_k);
  std::vector<double> alpha;
  std::vector<double> beta;
  auto bnorm = [&](const Vector& x) { return std::sqrt(std::max(0.0, x.dot(gram * x))); };
  q /= bnorm(q);
  double previous = 0.0;
  for (int j = 0; j < max_k; ++j) {
    basis.col(j) = q;
    gram_basis.col(j) = gram * q;
    Vector w = op(q);
    if (!w.allFinite()) throw EigenSolveFailure("lanczos: operator produced non-finite values");
    alpha.push_back(w.dot(gram_basis.col(j)));
    for (int pass = 0; pass < 2; ++pass) {
      const Vector c = gram_basis.leftCols(j + 1).transpose() * w;
      w -= basis.leftCols(j + 1) * c;
    }
    const double b = bnorm(w);

    const int m = j + 1;
    Matrix t = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    const double theta = es.eigenvalues()[m - 1];
    const double residual = std::abs(b * es.eigenvectors()(m - 1, m - 1));
    if (residual <= options.tol * std::abs(theta) ||
        (j > 2 && std::abs(theta - previous) <= 1e-3 * options.tol * std::abs(theta) && residual <= 1e3 * options.tol * std::abs(theta))) {
      return theta;
    }
    if (b <= 1e-300 || m == size) return theta;  // invariant subspace
    previous = theta;
    beta.push_back(b);
    q = w / b;
  }
  throw EigenSolveFailure("lanczos: no convergence in " + std::to_string(max_k) + " iterations");
}

std::pair<double, double> gradient_sup_norms(const FESpace& space, const FESolution& s) {
  const int n2 = space.layout().num_p2();
  const auto u1 = space.evaluate(s.velocity.head(n2));
  const auto u2 = space.evaluate(s.velocity.tail(n2));
  const auto t = space.evaluate(s.temperature + lift_vector(space));
  const double gu = (u1.dx.cwiseAbs2() + u1.dy.cwiseAbs2() + u2.dx.cwiseAbs2() + u2.dy.cwiseAbs2())
                        .cwiseSqrt()
                        .maxCoeff();
  const double gt = (t.dx.cwiseAbs2() + t.dy.cwiseAbs2()).cwiseSqrt().maxCoeff();
  return {gu, gt};
}

CertificationConstants compute_constants(const FullOrderModel& model, int inverse_samples, std::uint64_t seed) {
  const auto& space = model.space();
  const auto& dofs = space.layout();
  CertificationConstants c;
  c.smagorinsky = model.constants().smagorinsky;
  c.n_h = space.mesh().divisions();
  c.sobolev_velocity = sobolev_constant(space, true);
  c.sobolev_temperature = sobolev_constant(space, false);

  int n = 0;
  const std::vector<int> map = scalar_velocity_map(dofs, &n);
  const SparseMatrix k = restrict_matrix(space.stiffness(), map, n);
  const SparseMatrix m = restrict_matrix(space.p2_mass(), map, n);
  const SparseMatrix kf = restrict_matrix(
      assemble_fluctuation_diffusion(space, Vector::Ones(space.num_quadrature_points()), 1.0, 1.0), map, n);
  Eigen::SimplicialLLT<SparseMatrix> chol(k);
  if (chol.info() != Eigen::Success) throw LinearSolveFailure("compute_constants: stiffness not SPD");
  c.projector_stability = std::sqrt(lanczos_largest([&](const Vector& v) -> Vector { return chol.solve(kf * v); }, k, n));
  c.poincare = std::sqrt(lanczos_largest([&](const Vector& v) -> Vector { return chol.solve(m * v); }, k, n));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double h = space.mesh().cell_size();
  double best = 0.0;
  std::uniform_int_distribution<int> node(0, dofs.num_p2() - 1);
  for (int s = 0; s < inverse_samples; ++s) {
    Vector v(n);
    if (s % 2 == 0) {
      for (int i = 0; i < n; ++i) v[i] = dist(rng);
    } else {
      // Fields supported on one vertex patch: global random fields average the
      // gradient out and miss the h^-1 scaling of the sup.
      v.setZero();
      const Eigen::Vector2d c = dofs.p2_coordinate(node(rng));
      for (int i = 0; i < dofs.num_p2(); ++i) {
        if (map[i] >= 0 && (dofs.p2_coordinate(i) - c).lpNorm<Eigen::Infinity>() <= h * (1.0 + 1e-9)) {
          v[map[i]] = dist(rng);
        }
      }
      if (v.squaredNorm() == 0.0) continue;
    }
    const auto q = space.evaluate(extend(v, map));
    const double sup = (q.dx.cwiseAbs2() + q.dy.cwiseAbs2()).cwiseSqrt().maxCoeff();
    best = std::max(best, h * sup / std::sqrt(v.dot(k * v)));
  }
  c.inverse = best;
  return c;
}

double lipschitz_rho(double g, const CertificationConstants& c) {
  const double h = std::sqrt(g * g + 1.0) / c.n_h;
  const double cu = c.sobolev_velocity;
  const double ct = c.sobolev_temperature;
  const double cs = c.smagorinsky;
  const double cf = c.projector_stability;
  return std::max(1.0, g) * (2.0 * cu * cu + 2.0 * cu * ct) +
         std::max(g, 1.0 / g) * (3.0 * cs * h * c.inverse + 2.0 * cs * cs * h * cf * cf * cf);
}

InfSupResult beta_exact(const FullOrderModel& model, const FESolution& state, bool with_gamma,
                        const LanczosOptions& options) {
  const SparseMatrix j = model.jacobian(state);
  const Vector mean = model.mean_constraint();
  const int n = static_cast<int>(j.rows());
  auto augment = [&](const SparseMatrix& a) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(a.nonZeros()) + 2 * static_cast<std::size_t>(n));
    scatter_block(t, a, 1.0, nullptr, 0, nullptr, 0);
    for (int i = 0; i < n; ++i) {
      if (mean[i] != 0.0) {
        t.emplace_back(i, n, mean[i]);
        t.emplace_back(n, i, mean[i]);
      }
    }
    SparseMatrix out(n + 1, n + 1);
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    return out;
  };
  Eigen::SparseLU<SparseMatrix> lu;
  Eigen::SparseLU<SparseMatrix> lu_t;
  lu.compute(augment(j));
  if (lu.info() != Eigen::Success) throw NonPositiveBeta("beta_exact: singular derivative");
  const SparseMatrix jt = j.transpose();
  lu_t.compute(augment(jt));
  if (lu_t.info() != Eigen::Success) throw NonPositiveBeta("beta_exact: singular derivative");

  const SparseMatrix& x = model.x_matrix();
  const int po = model.system().pressure_offset();
  const int np = model.system().pressure_size();
  const double mass = mean.sum();
  auto project = [&](const Vector& v) -> Vector {
    Vector out = v;
    out.segment(po, np).array() -= mean.dot(v) / mass;
    return out;
  };
  auto solve = [&](Eigen::SparseLU<SparseMatrix>& f, const Vector& rhs) -> Vector {
    Vector b = Vector::Zero(n + 1);
    b.head(n) = rhs;
    const Vector s = f.solve(b);
    return s.head(n);
  };
  auto inverse_op = [&](const Vector& v) -> Vector { return solve(lu, x * solve(lu_t, x * v)); };
  const double lmax = lanczos_largest(inverse_op, x, n, options, project);
  if (!(lmax > 0.0) || !std::isfinite(lmax)) throw NonPositiveBeta("beta_exact: non-positive spectrum");
  InfSupResult out;
  out.beta = 1.0 / std::sqrt(lmax);
  if (with_gamma) {
    auto forward = [&](const Vector& v) -> Vector { return model.riesz(jt * model.riesz(j * v)); };
    out.gamma = std::sqrt(lanczos_largest(forward, x, n, options, project));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double thin_plate(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

}  // namespace

BetaSurrogate::BetaSurrogate(const ParameterBox& box, std::vector<ParameterPoint> nodes, std::vector<double> values)
    : box_(box), nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.size() != values_.size()) throw InvalidArgument("BetaSurrogate: size mismatch");
  if (nodes_.size() < 4) throw InvalidArgument("BetaSurrogate: at least 4 training pairs are required");
  if (!box_.rayleigh_fixed()) active_.push_back(0);
  if (!box_.height_fixed()) active_.push_back(1);
  const int n = static_cast<int>(nodes_.size());
  const int p = 1 + static_cast<int>(active_.size());
  std::vector<Eigen::VectorXd> x(n);
  for (int i = 0; i < n; ++i) x[i] = coordinates(nodes_[i]);
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      if ((x[i] - x[k]).norm() < 1e-12) throw SingularInterpolation("BetaSurrogate: duplicate training nodes");
    }
  }
  Matrix a = Matrix::Zero(n + p, n + p);
  Vector rhs = Vector::Zero(n + p);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) a(i, k) = thin_plate((x[i] - x[k]).norm());
    a(i, n) = a(n, i) = 1.0;
    for (int d = 0; d < static_cast<int>(active_.size()); ++d) a(i, n + 1 + d) = a(n + 1 + d, i) = x[i][d];
    if (!(values_[i] > 0.0)) throw InvalidArgument("BetaSurrogate: training values must be positive");
    rhs[i] = std::log(values_[i]);
  }
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw SingularInterpolation("BetaSurrogate: singular interpolation system");
  weights_ = lu.solve(rhs);
}

Eigen::VectorXd BetaSurrogate::coordinates(const ParameterPoint& mu) const {
  const Eigen::Vector2d s = box_.scaled(mu);
  Eigen::VectorXd out(active_.size());
  for (std::size_t d = 0; d < active_.size(); ++d) out[static_cast<Eigen::Index>(d)] = s[active_[d]];
  return out;
}

double BetaSurrogate::operator()(const ParameterPoint& mu) const {
  if (empty()) throw InvalidArgument("BetaSurrogate: not trained");
  const int n = static_cast<int>(nodes_.size());
  const Eigen::VectorXd x = coordinates(mu);
  double v = weights_[n];
  for (int i = 0; i < n; ++i) v += weights_[i] * thin_plate((x - coordinates(nodes_[i])).norm());
  for (int d = 0; d < static_cast<int>(active_.size()); ++d) v += weights_[n + 1 + d] * x[d];
  return std::exp(v);
}

double BetaSurrogate::leave_one_out_error() const {
  const std::size_t n = nodes_.size();
  if (n < 5) return std::numeric_limits<double>::quiet_NaN();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<ParameterPoint> nodes;
    std::vector<double> values;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      nodes.push_back(nodes_[k]);
      values.push_back(values_[k]);
    }
    const BetaSurrogate reduced(box_, std::move(nodes), std::move(values));
    worst = std::max(worst, std::abs(reduced(nodes_[i]) - values_[i]) / std::abs(values_[i]));
  }
  return worst;
}

// ---------------------------------------------------------------------------

ErrorCertificate certify(double epsilon, double beta, double rho, bool beta_certified) {
  if (!(beta > 0.0)) throw InvalidBeta("certify: beta must be positive, got " + std::to_string(beta));
  if (!(rho > 0.0)) throw InvalidArgument("certify: rho must be positive");
  if (!(epsilon >= 0.0)) throw InvalidArgument("certify: residual norm must be non-negative");
  ErrorCertificate c;
  c.epsilon = epsilon;
  c.beta = beta;
  c.rho = rho;
  c.beta_certified = beta_certified;
  c.tau = 4.0 * epsilon * rho / (beta * beta);
  c.defined = c.tau <= 1.0;
  if (c.defined) {
    // 1 - sqrt(1 - tau) written without cancellation.
    c.delta = beta / (2.0 * rho) * (c.tau / (1.0 + std::sqrt(1.0 - c.tau)));
  }
  return c;
}

BoundCheck check_error_bound(const FESpace& space, const FESolution& reduced, const FESolution& truth,
                             const ErrorCertificate& certificate) {
  FESolution diff = reduced;
  diff.velocity -= truth.velocity;
  diff.pressure -= truth.pressure;
  diff.temperature -= truth.temperature;
  BoundCheck r;
  r.true_error = x_norm(space, diff);
  r.bound_holds = certificate.defined && r.true_error <= certificate.delta;
  if (certificate.defined && r.true_error > 0.0) r.effectivity = certificate.delta / r.true_error;
  if (std::isfinite(certificate.gamma)) r.effectivity_cap = 2.0 * certificate.gamma / certificate.beta + certificate.tau;
  return r;
}

}  // namespace cavityrb

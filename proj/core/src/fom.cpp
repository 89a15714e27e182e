#include "cavityrb/fom.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <string>

namespace cavityrb {

namespace {

// Stacks an n2 x m matrix for each velocity component into a 2n2 x m matrix.
SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom) {
  std::vector<Triplet> trips;
  trips.reserve(top.nonZeros() + bottom.nonZeros());
  scatter_block(trips, top, 1.0, nullptr, 0, nullptr, 0);
  scatter_block(trips, bottom, 1.0, nullptr, static_cast<int>(top.rows()), nullptr, 0);
  SparseMatrix out(top.rows() + bottom.rows(), top.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

double coef(AffineTerm t, const ParameterPoint& mu, const PhysicalConstants& c) {
  return theta_coefficient(t, mu, c.prandtl);
}

// Triplets of every parameter-weighted linear block in system ordering.
void linear_blocks(std::vector<Triplet>& trips, const FullOrderModel& model, const ParameterPoint& mu,
                   bool with_lift_convection) {
  const auto& a = model.affine();
  const auto& sys = model.system();
  const auto& dofs = sys.dofs();
  const auto* vmap = &dofs.velocity_free_map();
  const auto* tmap = &dofs.temperature_free_map();
  const int po = sys.pressure_offset();
  const int to = sys.temperature_offset();
  const auto& pc = model.constants();
  using T = AffineTerm;

  scatter_block(trips, a.velocity_diffusion_x, coef(T::velocity_diffusion_x, mu, pc), vmap, 0, vmap, 0);
  scatter_block(trips, a.velocity_diffusion_y, coef(T::velocity_diffusion_y, mu, pc), vmap, 0, vmap, 0);
  const SparseMatrix div_x = a.divergence_x.transpose();
  const SparseMatrix div_y = a.divergence_y.transpose();
  scatter_block(trips, div_x, coef(T::divergence_x, mu, pc), vmap, 0, nullptr, po);
  scatter_block(trips, div_y, coef(T::divergence_y, mu, pc), vmap, 0, nullptr, po);
  scatter_block(trips, a.divergence_x, coef(T::divergence_x, mu, pc), nullptr, po, vmap, 0);
  scatter_block(trips, a.divergence_y, coef(T::divergence_y, mu, pc), nullptr, po, vmap, 0);
  scatter_block(trips, a.buoyancy, coef(T::buoyancy, mu, pc), vmap, 0, tmap, to);
  scatter_block(trips, a.temperature_diffusion_x, coef(T::temperature_diffusion_x, mu, pc), tmap, to, tmap, to);
  scatter_block(trips, a.temperature_diffusion_y, coef(T::temperature_diffusion_y, mu, pc), tmap, to, tmap, to);
  if (with_lift_convection) {
    scatter_block(trips, a.lift_convection, coef(T::lift_convection, mu, pc), tmap, to, vmap, 0);
  }
}

// Lagged convection and eddy-viscosity operators of the velocity/temperature rows.
void lagged_blocks(std::vector<Triplet>& trips, const FullOrderModel& model, const FESolution& state) {
  const auto& space = model.space();
  const auto& sys = model.system();
  const auto& dofs = sys.dofs();
  const auto* vmap = &dofs.velocity_free_map();
  const auto* tmap = &dofs.temperature_free_map();
  const int to = sys.temperature_offset();
  const auto& mu = state.parameter;
  const auto& pc = model.constants();
  using T = AffineTerm;
  const int n2 = dofs.num_p2();

  const auto u1 = space.evaluate(state.velocity.head(n2));
  const auto u2 = space.evaluate(state.velocity.tail(n2));
  const SparseMatrix conv =
      assemble_convection(space, u1.value, u2.value, coef(T::convection_x, mu, pc), coef(T::convection_y, mu, pc));
  const Vector nu = eddy_viscosity_field(space, state.velocity, mu.height, pc.smagorinsky);
  const SparseMatrix su = assemble_fluctuation_diffusion(space, nu, coef(T::eddy_velocity_x, mu, pc),
                                                         coef(T::eddy_velocity_y, mu, pc));
  const SparseMatrix st = assemble_fluctuation_diffusion(space, nu, coef(T::eddy_temperature_x, mu, pc),
                                                         coef(T::eddy_temperature_y, mu, pc));
  const SparseMatrix conv2 = block_diagonal(conv);
  const SparseMatrix su2 = block_diagonal(su);
  scatter_block(trips, conv2, 1.0, vmap, 0, vmap, 0);
  scatter_block(trips, su2, 1.0, vmap, 0, vmap, 0);
  scatter_block(trips, conv, 1.0, tmap, to, tmap, to);
  scatter_block(trips, st, 1.0, tmap, to, tmap, to);
}

void check_solve(const SparseMatrix& a, const Vector& x, const Vector& b, double tol, const char* what) {
  const double bn = b.norm();
  const double rn = (a * x - b).norm();
  if (!x.allFinite() || rn > tol * std::max(bn, 1e-300)) {
    throw LinearSolveFailure(std::string(what) + ": linear solve residual " + std::to_string(rn) +
                             " exceeds tolerance");
  }
}

}  // namespace

void scatter_block(std::vector<Triplet>& out, const SparseMatrix& block, double coefficient,
                   const std::vector<int>* row_map, int row_offset, const std::vector<int>* col_map,
                   int col_offset) {
  for (int k = 0; k < block.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(block, k); it; ++it) {
      const int r = row_map ? (*row_map)[it.row()] : static_cast<int>(it.row());
      const int c = col_map ? (*col_map)[it.col()] : static_cast<int>(it.col());
      if (r < 0 || c < 0) continue;
      out.emplace_back(row_offset + r, col_offset + c, coefficient * it.value());
    }
  }
}

// ---------------------------------------------------------------------------
// SystemLayout

SystemLayout::SystemLayout(const DofLayout& layout)
    : layout_(&layout),
      nu_(static_cast<int>(layout.velocity_free().size())),
      np_(layout.num_p1()),
      nt_(static_cast<int>(layout.temperature_free().size())) {}

Vector SystemLayout::restrict_velocity(const Vector& full) const {
  Vector out(nu_);
  const auto& f = layout_->velocity_free();
  for (int i = 0; i < nu_; ++i) out[i] = full[f[i]];
  return out;
}

Vector SystemLayout::restrict_temperature(const Vector& full) const {
  Vector out(nt_);
  const auto& f = layout_->temperature_free();
  for (int i = 0; i < nt_; ++i) out[i] = full[f[i]];
  return out;
}

Vector SystemLayout::extend_velocity(const Vector& free) const {
  Vector out = Vector::Zero(layout_->velocity_size());
  const auto& f = layout_->velocity_free();
  for (int i = 0; i < nu_; ++i) out[f[i]] = free[i];
  return out;
}

Vector SystemLayout::extend_temperature(const Vector& free) const {
  Vector out = Vector::Zero(layout_->temperature_size());
  const auto& f = layout_->temperature_free();
  for (int i = 0; i < nt_; ++i) out[f[i]] = free[i];
  return out;
}

Vector SystemLayout::pack(const FESolution& s) const {
  Vector x(size());
  x.head(nu_) = restrict_velocity(s.velocity);
  x.segment(nu_, np_) = s.pressure;
  x.tail(nt_) = restrict_temperature(s.temperature);
  return x;
}

FESolution SystemLayout::unpack(const Vector& x, const ParameterPoint& mu) const {
  return {mu, extend_velocity(x.head(nu_)), extend_temperature(x.tail(nt_)), x.segment(nu_, np_)};
}

// ---------------------------------------------------------------------------
// FullOrderModel

FullOrderModel::FullOrderModel(const UniformMesh& mesh, const PhysicalConstants& constants)
    : space_(mesh), affine_(assemble_affine(space_)), constants_(constants), system_(space_.layout()) {
  if (!(constants.prandtl > 0.0) || !(constants.smagorinsky >= 0.0)) {
    throw InvalidArgument("FullOrderModel: Prandtl must be positive and C_S nonnegative");
  }
  const auto& dofs = space_.layout();
  std::vector<Triplet> tv, tt, tx;
  const SparseMatrix k2 = block_diagonal(space_.stiffness());
  scatter_block(tv, k2, 1.0, &dofs.velocity_free_map(), 0, &dofs.velocity_free_map(), 0);
  scatter_block(tt, space_.stiffness(), 1.0, &dofs.temperature_free_map(), 0, &dofs.temperature_free_map(), 0);
  velocity_x_.resize(system_.velocity_size(), system_.velocity_size());
  velocity_x_.setFromTriplets(tv.begin(), tv.end());
  temperature_x_.resize(system_.temperature_size(), system_.temperature_size());
  temperature_x_.setFromTriplets(tt.begin(), tt.end());

  scatter_block(tx, velocity_x_, 1.0, nullptr, 0, nullptr, 0);
  scatter_block(tx, space_.p1_mass(), 1.0, nullptr, system_.pressure_offset(), nullptr, system_.pressure_offset());
  scatter_block(tx, temperature_x_, 1.0, nullptr, system_.temperature_offset(), nullptr,
                system_.temperature_offset());
  x_.resize(system_.size(), system_.size());
  x_.setFromTriplets(tx.begin(), tx.end());

  velocity_chol_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(velocity_x_);
  temperature_chol_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(temperature_x_);
  pressure_chol_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(space_.p1_mass());
  if (velocity_chol_->info() != Eigen::Success || temperature_chol_->info() != Eigen::Success ||
      pressure_chol_->info() != Eigen::Success) {
    throw LinearSolveFailure("FullOrderModel: X inner product is not positive definite");
  }
}

Vector FullOrderModel::residual(const FESolution& s, const Vector* nu) const {
  const auto& mu = s.parameter;
  const auto& a = affine_;
  using T = AffineTerm;
  auto c = [&](T t) { return coef(t, mu, constants_); };
  const Vector theta = s.temperature + a.lift;
  const auto nl = evaluate_nonlinear_forms(space_, s.velocity, theta, mu, constants_, nu);
  const SparseMatrix div = c(T::divergence_x) * a.divergence_x + c(T::divergence_y) * a.divergence_y;

  const Vector mom = c(T::velocity_diffusion_x) * (a.velocity_diffusion_x * s.velocity) +
                     c(T::velocity_diffusion_y) * (a.velocity_diffusion_y * s.velocity) +
                     div.transpose() * s.pressure + c(T::buoyancy) * (a.buoyancy * theta) +
                     nl.convection_velocity + nl.eddy_velocity;
  const Vector en = c(T::temperature_diffusion_x) * (a.temperature_diffusion_x * theta) +
                    c(T::temperature_diffusion_y) * (a.temperature_diffusion_y * theta) +
                    nl.convection_temperature + nl.eddy_temperature;
  Vector r(system_.size());
  r.head(system_.velocity_size()) = system_.restrict_velocity(mom);
  r.segment(system_.pressure_offset(), system_.pressure_size()) = div * s.velocity;
  r.tail(system_.temperature_size()) = system_.restrict_temperature(en);
  return r;
}

SparseMatrix FullOrderModel::jacobian(const FESolution& s) const {
  const auto& mu = s.parameter;
  const auto& dofs = space_.layout();
  const int n2 = dofs.num_p2();
  const auto* vmap = &dofs.velocity_free_map();
  const auto* tmap = &dofs.temperature_free_map();
  const int to = system_.temperature_offset();
  using T = AffineTerm;

  std::vector<Triplet> trips;
  linear_blocks(trips, *this, mu, false);
  lagged_blocks(trips, *this, s);

  // Derivatives with respect to the advecting field and the eddy-viscosity factor.
  const double cx = coef(T::convection_x, mu, constants_);
  const double cy = coef(T::convection_y, mu, constants_);
  const SparseMatrix dconv_u = vstack(
      assemble_advected_gradient(space_, space_.evaluate(s.velocity.head(n2)), cx, cy),
      assemble_advected_gradient(space_, space_.evaluate(s.velocity.tail(n2)), cx, cy));
  scatter_block(trips, dconv_u, 1.0, vmap, 0, vmap, 0);
  const SparseMatrix deddy = assemble_eddy_derivative(space_, s.velocity, mu.height, constants_.smagorinsky);
  scatter_block(trips, deddy, 1.0, vmap, 0, vmap, 0);
  const Vector theta = s.temperature + affine_.lift;
  const SparseMatrix dconv_t = assemble_advected_gradient(space_, space_.evaluate(theta), cx, cy);
  scatter_block(trips, dconv_t, 1.0, tmap, to, vmap, 0);

  SparseMatrix j(system_.size(), system_.size());
  j.setFromTriplets(trips.begin(), trips.end());
  return j;
}

Vector FullOrderModel::riesz(const Vector& functional) const {
  Vector r(system_.size());
  const int nu = system_.velocity_size();
  const int np = system_.pressure_size();
  const int nt = system_.temperature_size();
  r.head(nu) = velocity_chol_->solve(functional.head(nu));
  Vector p = pressure_chol_->solve(functional.segment(nu, np));
  const Vector& m = space_.pressure_mean_weights();
  p.array() -= m.dot(p) / m.sum();
  r.segment(nu, np) = p;
  r.tail(nt) = temperature_chol_->solve(functional.tail(nt));
  return r;
}

double FullOrderModel::dual_norm(const Vector& functional) const { return x_norm(riesz(functional)); }

double FullOrderModel::x_inner(const Vector& a, const Vector& b) const { return a.dot(x_ * b); }

double FullOrderModel::x_norm(const Vector& v) const { return std::sqrt(std::max(0.0, x_inner(v, v))); }

Vector FullOrderModel::mean_constraint() const {
  Vector m = Vector::Zero(system_.size());
  m.segment(system_.pressure_offset(), system_.pressure_size()) = space_.pressure_mean_weights();
  return m;
}

namespace {

Vector whiten(const Eigen::SimplicialLLT<SparseMatrix>& chol, const Vector& f) {
  const Vector pf = chol.permutationP() * f;
  return chol.matrixL().solve(pf);
}

}  // namespace

Vector FullOrderModel::whiten_velocity(const Vector& f) const { return whiten(*velocity_chol_, f); }
Vector FullOrderModel::whiten_pressure(const Vector& f) const { return whiten(*pressure_chol_, f); }
Vector FullOrderModel::whiten_temperature(const Vector& f) const { return whiten(*temperature_chol_, f); }

Vector FullOrderModel::solve_velocity_laplacian(const Vector& rhs_free) const {
  return velocity_chol_->solve(rhs_free);
}

// ---------------------------------------------------------------------------

FESolution solve_fom(const FullOrderModel& model, const ParameterPoint& mu, const FomConfig& config,
                     std::vector<FomStep>* log) {
  if (!(config.dt > 0.0) || !(config.steady_tol > 0.0) || config.max_steps < 1) {
    throw InvalidArgument("solve_fom: dt, steady_tol and max_steps must be positive");
  }
  if (!(mu.height > 0.0) || mu.rayleigh < 0.0) {
    throw InvalidArgument("solve_fom: invalid parameter point");
  }
  const auto clock_start = std::chrono::steady_clock::now();
  const auto& sys = model.system();
  const auto& dofs = sys.dofs();
  const auto& a = model.affine();
  const auto* vmap = &dofs.velocity_free_map();
  const auto* tmap = &dofs.temperature_free_map();
  const int n = sys.size();
  const int po = sys.pressure_offset();
  const int to = sys.temperature_offset();
  const double inv_dt = 1.0 / config.dt;

  // Constant part: pseudo-time mass, linear blocks and the zero-mean multiplier.
  std::vector<Triplet> fixed;
  linear_blocks(fixed, model, mu, true);
  scatter_block(fixed, a.velocity_mass, inv_dt, vmap, 0, vmap, 0);
  scatter_block(fixed, model.space().p2_mass(), inv_dt, tmap, to, tmap, to);
  const Vector& m = model.space().pressure_mean_weights();
  for (int i = 0; i < sys.pressure_size(); ++i) {
    fixed.emplace_back(po + i, n, m[i]);
    fixed.emplace_back(n, po + i, m[i]);
  }

  // Lift contributions move to the right-hand side.
  const double c_b = theta_coefficient(AffineTerm::buoyancy, mu, model.constants().prandtl);
  const double c_tx = theta_coefficient(AffineTerm::temperature_diffusion_x, mu, model.constants().prandtl);
  const double c_ty = theta_coefficient(AffineTerm::temperature_diffusion_y, mu, model.constants().prandtl);
  Vector lift_rhs = Vector::Zero(n + 1);
  lift_rhs.head(sys.velocity_size()) = -c_b * sys.restrict_velocity(a.buoyancy * a.lift);
  lift_rhs.segment(to, sys.temperature_size()) = -sys.restrict_temperature(
      c_tx * (a.temperature_diffusion_x * a.lift) + c_ty * (a.temperature_diffusion_y * a.lift));

  const SparseMatrix vmass = [&] {
    std::vector<Triplet> t;
    scatter_block(t, a.velocity_mass, inv_dt, vmap, 0, vmap, 0);
    scatter_block(t, model.space().p2_mass(), inv_dt, tmap, to, tmap, to);
    SparseMatrix mm(n, n);
    mm.setFromTriplets(t.begin(), t.end());
    return mm;
  }();

  FESolution state = zero_solution(model.space(), mu);
  Vector x = sys.pack(state);
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  double increment = 0.0;
  for (int step = 1; step <= config.max_steps; ++step) {
    std::vector<Triplet> trips = fixed;
    lagged_blocks(trips, model, state);
    SparseMatrix k(n + 1, n + 1);
    k.setFromTriplets(trips.begin(), trips.end());
    k.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(k);
      analyzed = true;
    }
    lu.factorize(k);
    if (lu.info() != Eigen::Success) {
      throw LinearSolveFailure("solve_fom: step matrix factorization failed at step " + std::to_string(step));
    }
    Vector rhs = lift_rhs;
    rhs.head(n) += vmass * x;
    Vector sol = lu.solve(rhs);
    check_solve(k, sol, rhs, config.linear_solver_tol, "solve_fom");
    const Vector next = sol.head(n);
    increment = model.x_norm(next - x);
    x = next;
    state = sys.unpack(x, mu);
    if (log) {
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
      log->push_back({step, increment, wall});
    }
    if (!std::isfinite(increment)) {
      throw NonConvergence("solve_fom: iteration diverged at step " + std::to_string(step), increment);
    }
    if (increment < config.steady_tol) return state;
  }
  throw NonConvergence("solve_fom: no steady state after " + std::to_string(config.max_steps) + " steps",
                       increment);
}

Vector solve_supremizer(const FullOrderModel& model, const Vector& pressure, double height) {
  const auto& a = model.affine();
  const SparseMatrix div = height * a.divergence_x + a.divergence_y;
  const Vector rhs = model.system().restrict_velocity(div.transpose() * pressure);
  const Vector free = model.solve_velocity_laplacian(rhs);
  if (!free.allFinite()) throw LinearSolveFailure("solve_supremizer: Riesz solve failed");
  return model.system().extend_velocity(free);
}

}  // namespace cavityrb

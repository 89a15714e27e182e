#include "cavityrb/rb_offline.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace cavityrb {

namespace {

// Grows m to rows x cols; block(r0, nr, c0, nc) supplies only the entries outside
// the previous top-left corner.
template <typename Block>
void grow(Matrix& m, Eigen::Index rows, Eigen::Index cols, Block&& block) {
  const Eigen::Index old_r = m.rows();
  const Eigen::Index old_c = m.cols();
  m.conservativeResize(rows, cols);
  if (rows > old_r) m.bottomRows(rows - old_r) = block(old_r, rows - old_r, 0, cols);
  if (cols > old_c && old_r > 0) m.topRightCorner(old_r, cols - old_c) = block(0, old_r, old_c, cols - old_c);
}

void grow(Vector& v, Eigen::Index rows, const std::function<Vector(Eigen::Index, Eigen::Index)>& block) {
  const Eigen::Index old = v.size();
  v.conservativeResize(rows);
  if (rows > old) v.tail(rows - old) = block(old, rows - old);
}

// sum_q w_q a(q) b(q) for column blocks: A^T diag(d) B.
Matrix weighted_product(const Matrix& a, const Vector& d, const Matrix& b) {
  return a.transpose() * (d.asDiagonal() * b);
}

Matrix append_column(const Matrix& m, const Vector& v) {
  Matrix out(v.size(), m.cols() + 1);
  if (m.cols() > 0) out.leftCols(m.cols()) = m;
  out.col(m.cols()) = v;
  return out;
}

}  // namespace

void ResidualRiesz::compress() {
  for (auto& f : factors) {
    if (f.cols() == 0 || f.rows() == 0) continue;
    const Eigen::Index k = std::min(f.rows(), f.cols());
    Eigen::HouseholderQR<Matrix> qr(f);
    Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    f = std::move(r);
  }
}

Vector orthonormalize_against(const Matrix& basis, const Vector& v, const SparseMatrix& gram) {
  const double original = std::sqrt(std::max(0.0, v.dot(gram * v)));
  if (!(original > 0.0) || !std::isfinite(original)) {
    throw RedundantSnapshot("orthonormalize: zero or non-finite vector");
  }
  Vector w = v;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
      const Vector gk = gram * basis.col(k);
      w -= w.dot(gk) * basis.col(k);
    }
  }
  const double remainder = std::sqrt(std::max(0.0, w.dot(gram * w)));
  if (remainder < 1e-10 * original) {
    throw RedundantSnapshot("orthonormalize: vector is linearly dependent on the basis (relative remainder " +
                            std::to_string(remainder / original) + ")");
  }
  return w / remainder;
}

Matrix orthonormalize(const Matrix& basis, const SparseMatrix& gram) {
  Matrix out(basis.rows(), 0);
  for (Eigen::Index k = 0; k < basis.cols(); ++k) {
    out = append_column(out, orthonormalize_against(out, basis.col(k), gram));
  }
  return out;
}

// ---------------------------------------------------------------------------

ReducedProjector::ReducedProjector(const FullOrderModel& model, const EIMApproximation& eim)
    : model_(&model), eim_(&eim) {
  const auto& space = model.space();
  const auto& dofs = space.layout();
  vel_gram_ = block_diagonal(space.stiffness());
  temp_gram_ = space.stiffness();
  pres_gram_ = space.p1_mass();
  space_.velocity.resize(dofs.velocity_size(), 0);
  space_.temperature.resize(dofs.temperature_size(), 0);
  space_.pressure.resize(dofs.pressure_size(), 0);
  const int nq = space.num_quadrature_points();
  for (Matrix* m : {&u1_, &u2_, &u1x_, &u1y_, &u2x_, &u2y_, &f1x_, &f1y_, &f2x_, &f2y_, &t_, &tx_, &ty_, &tfx_, &tfy_}) {
    m->resize(nq, 0);
  }
  const auto lift_q = space.evaluate(model.affine().lift);
  lift_x_ = lift_q.dx;
  lift_y_ = lift_q.dy;
  const int m = eim.size();
  for (auto* stack : {&ops_.eddy_velocity_x, &ops_.eddy_velocity_y, &ops_.eddy_temperature_x, &ops_.eddy_temperature_y}) {
    stack->assign(m, Matrix(0, 0));
  }
  for (auto& g : ops_.magic_gradients) g.resize(m, 0);
  update(0, 0);
}

ReducedProjector::ReducedProjector(const FullOrderModel& model, const EIMApproximation& eim,
                                   const ReducedBasisSpace& space)
    : ReducedProjector(model, eim) {
  if (space.velocity.cols() != 2 * space.size() || space.temperature.cols() != space.size() ||
      static_cast<int>(space.parameters.size()) != space.size()) {
    throw InvalidArgument("ReducedProjector: inconsistent basis dimensions");
  }
  for (int k = 0; k < space.size(); ++k) {
    add_columns(space.velocity.col(2 * k), space.velocity.col(2 * k + 1), space.pressure.col(k),
                space.temperature.col(k), space.parameters[k]);
  }
  update(0, 0);
}

void ReducedProjector::enrich(const FESolution& snapshot) {
  const Vector supremizer = solve_supremizer(*model_, snapshot.pressure, snapshot.parameter.height);
  const Vector zu = orthonormalize_against(space_.velocity, snapshot.velocity, vel_gram_);
  const Vector zs = orthonormalize_against(append_column(space_.velocity, zu), supremizer, vel_gram_);
  const Vector xi = orthonormalize_against(space_.pressure, snapshot.pressure, pres_gram_);
  const Vector phi = orthonormalize_against(space_.temperature, snapshot.temperature, temp_gram_);
  append(zu, zs, xi, phi, snapshot.parameter);
}

void ReducedProjector::append(const Vector& velocity_snapshot, const Vector& velocity_supremizer,
                              const Vector& pressure, const Vector& temperature, const ParameterPoint& mu) {
  const int old_u = static_cast<int>(space_.velocity.cols());
  const int old_n = space_.size();
  add_columns(velocity_snapshot, velocity_supremizer, pressure, temperature, mu);
  update(old_u, old_n);
}

void ReducedProjector::add_columns(const Vector& velocity_snapshot, const Vector& velocity_supremizer,
                                   const Vector& pressure, const Vector& temperature, const ParameterPoint& mu) {
  const auto& space = model_->space();
  const int n2 = space.layout().num_p2();
  auto push = [](Matrix& m, const Vector& v) {
    m.conservativeResize(Eigen::NoChange, m.cols() + 1);
    m.col(m.cols() - 1) = v;
  };
  for (const Vector* v : {&velocity_snapshot, &velocity_supremizer}) {
    push(space_.velocity, *v);
    const auto a = space.evaluate(v->head(n2));
    const auto b = space.evaluate(v->tail(n2));
    const auto fa = space.evaluate_fluctuation(v->head(n2));
    const auto fb = space.evaluate_fluctuation(v->tail(n2));
    push(u1_, a.value);
    push(u2_, b.value);
    push(u1x_, a.dx);
    push(u1y_, a.dy);
    push(u2x_, b.dx);
    push(u2y_, b.dy);
    push(f1x_, fa.dx);
    push(f1y_, fa.dy);
    push(f2x_, fb.dx);
    push(f2y_, fb.dy);
  }
  push(space_.pressure, pressure);
  push(space_.temperature, temperature);
  const auto t = space.evaluate(temperature);
  const auto ft = space.evaluate_fluctuation(temperature);
  push(t_, t.value);
  push(tx_, t.dx);
  push(ty_, t.dy);
  push(tfx_, ft.dx);
  push(tfy_, ft.dy);
  space_.parameters.push_back(mu);
}

void ReducedProjector::update(int old_u, int old_n) {
  update_operators(old_u, old_n);
  update_riesz(old_u, old_n);
}

void ReducedProjector::update_operators(int old_u, int old_n) {
  const auto& a = model_->affine();
  const Vector& w = model_->space().quadrature_weights();
  const Matrix& zu = space_.velocity;
  const Matrix& zt = space_.temperature;
  const Matrix& zp = space_.pressure;
  const Eigen::Index nu = zu.cols();
  const Eigen::Index nn = zt.cols();

  auto project = [](const Matrix& rows, const SparseMatrix& op, const Matrix& cols) {
    return [&rows, &op, &cols](Eigen::Index r0, Eigen::Index nr, Eigen::Index c0, Eigen::Index nc) -> Matrix {
      return rows.middleCols(r0, nr).transpose() * (op * cols.middleCols(c0, nc));
    };
  };
  grow(ops_.velocity_diffusion_x, nu, nu, project(zu, a.velocity_diffusion_x, zu));
  grow(ops_.velocity_diffusion_y, nu, nu, project(zu, a.velocity_diffusion_y, zu));
  grow(ops_.divergence_x, nn, nu, project(zp, a.divergence_x, zu));
  grow(ops_.divergence_y, nn, nu, project(zp, a.divergence_y, zu));
  grow(ops_.buoyancy, nu, nn, project(zu, a.buoyancy, zt));
  grow(ops_.temperature_diffusion_x, nn, nn, project(zt, a.temperature_diffusion_x, zt));
  grow(ops_.temperature_diffusion_y, nn, nn, project(zt, a.temperature_diffusion_y, zt));
  grow(ops_.lift_convection, nn, nu, project(zt, a.lift_convection, zu));
  const Vector buoy_lift = a.buoyancy * a.lift;
  const Vector tdx_lift = a.temperature_diffusion_x * a.lift;
  const Vector tdy_lift = a.temperature_diffusion_y * a.lift;
  grow(ops_.buoyancy_lift, nu, [&](Eigen::Index r0, Eigen::Index nr) -> Vector {
    return zu.middleCols(r0, nr).transpose() * buoy_lift;
  });
  grow(ops_.temperature_diffusion_lift_x, nn, [&](Eigen::Index r0, Eigen::Index nr) -> Vector {
    return zt.middleCols(r0, nr).transpose() * tdx_lift;
  });
  grow(ops_.temperature_diffusion_lift_y, nn, [&](Eigen::Index r0, Eigen::Index nr) -> Vector {
    return zt.middleCols(r0, nr).transpose() * tdy_lift;
  });

  // Velocity-valued trilinear slices: sum over components of test value x trial derivative.
  auto vel_slice = [&](const Vector& d, const Matrix& dx1, const Matrix& dx2) {
    return [&, d](Eigen::Index r0, Eigen::Index nr, Eigen::Index c0, Eigen::Index nc) -> Matrix {
      return weighted_product(u1_.middleCols(r0, nr), d, dx1.middleCols(c0, nc)) +
             weighted_product(u2_.middleCols(r0, nr), d, dx2.middleCols(c0, nc));
    };
  };
  auto temp_slice = [&](const Vector& d, const Matrix& dx) {
    return [&, d](Eigen::Index r0, Eigen::Index nr, Eigen::Index c0, Eigen::Index nc) -> Matrix {
      return weighted_product(t_.middleCols(r0, nr), d, dx.middleCols(c0, nc));
    };
  };
  auto eddy_vel_slice = [&](const Vector& d, const Matrix& g1, const Matrix& g2) {
    return [&, d](Eigen::Index r0, Eigen::Index nr, Eigen::Index c0, Eigen::Index nc) -> Matrix {
      return weighted_product(g1.middleCols(r0, nr), d, g1.middleCols(c0, nc)) +
             weighted_product(g2.middleCols(r0, nr), d, g2.middleCols(c0, nc));
    };
  };
  auto eddy_temp_slice = [&](const Vector& d, const Matrix& g) {
    return [&, d](Eigen::Index r0, Eigen::Index nr, Eigen::Index c0, Eigen::Index nc) -> Matrix {
      return weighted_product(g.middleCols(r0, nr), d, g.middleCols(c0, nc));
    };
  };

  ops_.convection_velocity_x.resize(nu);
  ops_.convection_velocity_y.resize(nu);
  ops_.convection_temperature_x.resize(nu);
  ops_.convection_temperature_y.resize(nu);
  for (Eigen::Index s = 0; s < nu; ++s) {
    const Vector dx = w.cwiseProduct(u1_.col(s));
    const Vector dy = w.cwiseProduct(u2_.col(s));
    if (s >= old_u) {
      for (auto* m : {&ops_.convection_velocity_x[s], &ops_.convection_velocity_y[s],
                      &ops_.convection_temperature_x[s], &ops_.convection_temperature_y[s]}) {
        m->resize(0, 0);
      }
    }
    grow(ops_.convection_velocity_x[s], nu, nu, vel_slice(dx, u1x_, u2x_));
    grow(ops_.convection_velocity_y[s], nu, nu, vel_slice(dy, u1y_, u2y_));
    grow(ops_.convection_temperature_x[s], nn, nn, temp_slice(dx, tx_));
    grow(ops_.convection_temperature_y[s], nn, nn, temp_slice(dy, ty_));
  }
  for (int k = 0; k < eim_->size(); ++k) {
    const Vector d = w.cwiseProduct(eim_->basis.col(k));
    grow(ops_.eddy_velocity_x[k], nu, nu, eddy_vel_slice(d, f1x_, f2x_));
    grow(ops_.eddy_velocity_y[k], nu, nu, eddy_vel_slice(d, f1y_, f2y_));
    grow(ops_.eddy_temperature_x[k], nn, nn, eddy_temp_slice(d, tfx_));
    grow(ops_.eddy_temperature_y[k], nn, nn, eddy_temp_slice(d, tfy_));
  }
  const std::array<const Matrix*, 4> grads{&f1x_, &f1y_, &f2x_, &f2y_};
  for (int c = 0; c < 4; ++c) {
    Matrix& g = ops_.magic_gradients[c];
    g.conservativeResize(eim_->size(), nu);
    for (int i = 0; i < eim_->size(); ++i) {
      for (Eigen::Index j = old_u; j < nu; ++j) g(i, j) = (*grads[c])(eim_->magic_points[i], j);
    }
  }
  (void)old_n;
}

Vector ReducedProjector::component_functional(int block, const ResidualComponent& c) const {
  const auto& a = model_->affine();
  const auto& space = model_->space();
  const Vector& w = space.quadrature_weights();
  const Matrix& zu = space_.velocity;
  const Matrix& zt = space_.temperature;
  const Matrix& zp = space_.pressure;
  const int n2 = space.layout().num_p2();
  const int i = c.first;
  const int j = c.second;
  auto stack = [n2](const Vector& top, const Vector& bottom) {
    Vector v(2 * n2);
    v.head(n2) = top;
    v.tail(n2) = bottom;
    return v;
  };
  const Vector zero_q = Vector::Zero(w.size());
  using R = ResidualTerm;
  Vector f;
  switch (c.term) {
    case R::velocity_diffusion_x: f = a.velocity_diffusion_x * zu.col(i); break;
    case R::velocity_diffusion_y: f = a.velocity_diffusion_y * zu.col(i); break;
    case R::pressure_gradient_x: f = a.divergence_x.transpose() * zp.col(i); break;
    case R::pressure_gradient_y: f = a.divergence_y.transpose() * zp.col(i); break;
    case R::buoyancy: f = a.buoyancy * zt.col(i); break;
    case R::buoyancy_lift: f = a.buoyancy * a.lift; break;
    case R::convection_velocity_x: {
      const Vector d = w.cwiseProduct(u1_.col(i));
      f = stack(integrate_against_p2(space, d.cwiseProduct(u1x_.col(j))),
                integrate_against_p2(space, d.cwiseProduct(u2x_.col(j))));
      break;
    }
    case R::convection_velocity_y: {
      const Vector d = w.cwiseProduct(u2_.col(i));
      f = stack(integrate_against_p2(space, d.cwiseProduct(u1y_.col(j))),
                integrate_against_p2(space, d.cwiseProduct(u2y_.col(j))));
      break;
    }
    case R::eddy_velocity_x: {
      const Vector d = w.cwiseProduct(eim_->basis.col(i));
      f = stack(integrate_against_fluctuation_gradient(space, d.cwiseProduct(f1x_.col(j)), zero_q),
                integrate_against_fluctuation_gradient(space, d.cwiseProduct(f2x_.col(j)), zero_q));
      break;
    }
    case R::eddy_velocity_y: {
      const Vector d = w.cwiseProduct(eim_->basis.col(i));
      f = stack(integrate_against_fluctuation_gradient(space, zero_q, d.cwiseProduct(f1y_.col(j))),
                integrate_against_fluctuation_gradient(space, zero_q, d.cwiseProduct(f2y_.col(j))));
      break;
    }
    case R::divergence_x: f = a.divergence_x * zu.col(i); break;
    case R::divergence_y: f = a.divergence_y * zu.col(i); break;
    case R::temperature_diffusion_x: f = a.temperature_diffusion_x * zt.col(i); break;
    case R::temperature_diffusion_y: f = a.temperature_diffusion_y * zt.col(i); break;
    case R::temperature_diffusion_lift_x: f = a.temperature_diffusion_x * a.lift; break;
    case R::temperature_diffusion_lift_y: f = a.temperature_diffusion_y * a.lift; break;
    case R::convection_temperature_x:
      f = integrate_against_p2(space, w.cwiseProduct(u1_.col(i)).cwiseProduct(tx_.col(j)));
      break;
    case R::convection_temperature_y:
      f = integrate_against_p2(space, w.cwiseProduct(u2_.col(i)).cwiseProduct(ty_.col(j)));
      break;
    case R::lift_convection: f = a.lift_convection * zu.col(i); break;
    case R::eddy_temperature_x: {
      const Vector d = w.cwiseProduct(eim_->basis.col(i));
      f = integrate_against_fluctuation_gradient(space, d.cwiseProduct(tfx_.col(j)), zero_q);
      break;
    }
    case R::eddy_temperature_y: {
      const Vector d = w.cwiseProduct(eim_->basis.col(i));
      f = integrate_against_fluctuation_gradient(space, zero_q, d.cwiseProduct(tfy_.col(j)));
      break;
    }
  }
  const auto& sys = model_->system();
  switch (block) {
    case 0: return model_->whiten_velocity(sys.restrict_velocity(f));
    case 1: return model_->whiten_pressure(f);
    default: return model_->whiten_temperature(sys.restrict_temperature(f));
  }
}

void ReducedProjector::update_riesz(int old_u, int old_n) {
  const int nu = static_cast<int>(space_.velocity.cols());
  const int nn = space_.size();
  const int m = eim_->size();
  using R = ResidualTerm;
  std::array<std::vector<ResidualComponent>, 3> added;
  auto& mom = added[0];
  auto& cont = added[1];
  auto& en = added[2];
  const bool first = riesz_.components[0].empty() && riesz_.components[2].empty();

  for (int j = old_u; j < nu; ++j) {
    mom.push_back({R::velocity_diffusion_x, j});
    mom.push_back({R::velocity_diffusion_y, j});
  }
  for (int k = old_n; k < nn; ++k) {
    mom.push_back({R::pressure_gradient_x, k});
    mom.push_back({R::pressure_gradient_y, k});
    mom.push_back({R::buoyancy, k});
  }
  if (first) mom.push_back({R::buoyancy_lift});
  for (int s = 0; s < nu; ++s) {
    for (int j = 0; j < nu; ++j) {
      if (s < old_u && j < old_u) continue;
      mom.push_back({R::convection_velocity_x, s, j});
      mom.push_back({R::convection_velocity_y, s, j});
    }
  }
  for (int k = 0; k < m; ++k) {
    for (int j = old_u; j < nu; ++j) {
      mom.push_back({R::eddy_velocity_x, k, j});
      mom.push_back({R::eddy_velocity_y, k, j});
    }
  }
  for (int j = old_u; j < nu; ++j) {
    cont.push_back({R::divergence_x, j});
    cont.push_back({R::divergence_y, j});
  }
  for (int k = old_n; k < nn; ++k) {
    en.push_back({R::temperature_diffusion_x, k});
    en.push_back({R::temperature_diffusion_y, k});
  }
  if (first) {
    en.push_back({R::temperature_diffusion_lift_x});
    en.push_back({R::temperature_diffusion_lift_y});
  }
  for (int s = 0; s < nu; ++s) {
    for (int k = 0; k < nn; ++k) {
      if (s < old_u && k < old_n) continue;
      en.push_back({R::convection_temperature_x, s, k});
      en.push_back({R::convection_temperature_y, s, k});
    }
  }
  for (int s = old_u; s < nu; ++s) en.push_back({R::lift_convection, s});
  for (int q = 0; q < m; ++q) {
    for (int k = old_n; k < nn; ++k) {
      en.push_back({R::eddy_temperature_x, q, k});
      en.push_back({R::eddy_temperature_y, q, k});
    }
  }

  const auto& sys = model_->system();
  const std::array<int, 3> rows{sys.velocity_size(), sys.pressure_size(), sys.temperature_size()};
  for (int b = 0; b < 3; ++b) {
    Matrix& f = riesz_.factors[b];
    const Eigen::Index old_cols = f.cols();
    if (f.rows() != rows[b]) f.resize(rows[b], 0);
    f.conservativeResize(rows[b], old_cols + static_cast<Eigen::Index>(added[b].size()));
    for (std::size_t c = 0; c < added[b].size(); ++c) {
      f.col(old_cols + static_cast<Eigen::Index>(c)) = component_functional(b, added[b][c]);
    }
    riesz_.components[b].insert(riesz_.components[b].end(), added[b].begin(), added[b].end());
  }
}

ReducedOperatorSet project_operators(const ReducedBasisSpace& space, const FullOrderModel& model,
                                     const EIMApproximation& eim) {
  return ReducedProjector(model, eim, space).operators();
}

}  // namespace cavityrb

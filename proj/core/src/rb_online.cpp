#include "cavityrb/rb_online.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cavityrb {

namespace {

using T = AffineTerm;

struct Weights {
  double vdx, vdy, divx, divy, buoy, tdx, tdy, lift, cx, cy, evx, evy, etx, ety;
};

Weights weights(const ParameterPoint& mu, double pr) {
  auto c = [&](T t) { return theta_coefficient(t, mu, pr); };
  return {c(T::velocity_diffusion_x), c(T::velocity_diffusion_y), c(T::divergence_x), c(T::divergence_y),
          c(T::buoyancy),           c(T::temperature_diffusion_x), c(T::temperature_diffusion_y),
          c(T::lift_convection),    c(T::convection_x),           c(T::convection_y),
          c(T::eddy_velocity_x),    c(T::eddy_velocity_y),        c(T::eddy_temperature_x),
          c(T::eddy_temperature_y)};
}

// Relative reference: residual of the zero reduced state without nonlinear terms.
double reference_norm(const ReducedModel& model, const Weights& w) {
  const auto& o = model.operators;
  const double m = (w.buoy * o.buoyancy_lift).squaredNorm();
  const double e = (w.tdx * o.temperature_diffusion_lift_x + w.tdy * o.temperature_diffusion_lift_y).squaredNorm();
  const double r = std::sqrt(m + e);
  return r > 0.0 ? r : 1.0;
}

double scaled_distance(const ParameterBox& box, const ParameterPoint& a, const ParameterPoint& b) {
  return (box.scaled(a) - box.scaled(b)).norm();
}

int nearest_snapshot(const ReducedModel& model, const ParameterPoint& mu) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(model.basis.parameters.size()); ++k) {
    const double d = scaled_distance(model.box, model.basis.parameters[k], mu);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

ReducedSolution newton(const ParameterPoint& mu, const ReducedModel& model, const NewtonOptions& opt,
                       Vector x) {
  const int n = model.size();
  const Weights w = weights(mu, model.constants.prandtl);
  const double ref = reference_norm(model, w);
  ReducedSolution out;
  out.parameter = mu;
  int increases = 0;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opt.max_iter; ++it) {
    const Vector sigma = online_sigma(model, mu, x.head(2 * n));
    ReducedSystem sys = reduced_system(model, mu, x, sigma);
    const double rn = sys.residual.norm() / ref;
    if (!std::isfinite(rn)) throw NewtonDivergence("rb_solve: non-finite residual");
    out.history.push_back(rn);
    if (rn < opt.tol) {
      out.velocity = x.head(2 * n);
      out.pressure = x.segment(2 * n, n);
      out.temperature = x.tail(n);
      out.sigma = sigma;
      out.newton_iterations = it;
      out.residual_norm = rn;
      return out;
    }
    increases = rn > previous ? increases + 1 : 0;
    if (increases >= opt.max_increases) {
      throw NewtonDivergence("rb_solve: residual grew for " + std::to_string(increases) + " consecutive steps");
    }
    previous = rn;
    if (it == opt.max_iter) break;
    Eigen::PartialPivLU<Matrix> lu(sys.jacobian);
    const Vector dx = lu.solve(sys.residual);
    if (!dx.allFinite()) throw NewtonDivergence("rb_solve: singular reduced Jacobian");
    x -= dx;
  }
  throw NewtonDivergence("rb_solve: no convergence in " + std::to_string(opt.max_iter) + " iterations (residual " +
                         std::to_string(out.history.back()) + ")");
}

}  // namespace

Vector ReducedSolution::coordinates() const {
  Vector x(velocity.size() + pressure.size() + temperature.size());
  x << velocity, pressure, temperature;
  return x;
}

Vector online_sigma(const ReducedModel& model, const ParameterPoint& mu, const Vector& a) {
  const auto& g = model.operators.magic_gradients;
  const int m = model.eim.size();
  if (m == 0) return Vector();
  const Vector g11 = g[0] * a;
  const Vector g12 = g[1] * a;
  const Vector g21 = g[2] * a;
  const Vector g22 = g[3] * a;
  Vector nu(m);
  for (int i = 0; i < m; ++i) {
    nu[i] = eddy_viscosity(g11[i], g12[i], g21[i], g22[i], mu.height, model.constants.smagorinsky, model.n_h);
  }
  return model.eim.coefficients(nu);
}

ReducedSystem reduced_system(const ReducedModel& model, const ParameterPoint& mu, const Vector& x,
                             const Vector& sigma) {
  const auto& o = model.operators;
  const int n = model.size();
  const int nu = 2 * n;
  const Weights w = weights(mu, model.constants.prandtl);
  const Vector a = x.head(nu);
  const Vector b = x.segment(nu, n);
  const Vector c = x.tail(n);

  Matrix juu = w.vdx * o.velocity_diffusion_x + w.vdy * o.velocity_diffusion_y;
  Matrix jtt = w.tdx * o.temperature_diffusion_x + w.tdy * o.temperature_diffusion_y;
  const Matrix div = w.divx * o.divergence_x + w.divy * o.divergence_y;
  Matrix jtu = w.lift * o.lift_convection;
  for (int k = 0; k < static_cast<int>(sigma.size()); ++k) {
    juu += sigma[k] * (w.evx * o.eddy_velocity_x[k] + w.evy * o.eddy_velocity_y[k]);
    jtt += sigma[k] * (w.etx * o.eddy_temperature_x[k] + w.ety * o.eddy_temperature_y[k]);
  }
  // Linear-in-state part of the operator; convection adds a(s) C[s].
  Matrix conv_u = Matrix::Zero(nu, nu);
  Matrix conv_t = Matrix::Zero(n, n);
  Matrix dconv_u(nu, nu);
  Matrix dconv_t(n, nu);
  for (int s = 0; s < nu; ++s) {
    const Matrix cu = w.cx * o.convection_velocity_x[s] + w.cy * o.convection_velocity_y[s];
    const Matrix ct = w.cx * o.convection_temperature_x[s] + w.cy * o.convection_temperature_y[s];
    conv_u += a[s] * cu;
    conv_t += a[s] * ct;
    dconv_u.col(s) = cu * a;
    dconv_t.col(s) = ct * c;
  }

  ReducedSystem out;
  out.residual.resize(nu + 2 * n);
  out.residual.head(nu) = (juu + conv_u) * a + div.transpose() * b + w.buoy * (o.buoyancy * c + o.buoyancy_lift);
  out.residual.segment(nu, n) = div * a;
  out.residual.tail(n) = (jtt + conv_t) * c + jtu * a + w.tdx * o.temperature_diffusion_lift_x +
                         w.tdy * o.temperature_diffusion_lift_y;

  out.jacobian = Matrix::Zero(nu + 2 * n, nu + 2 * n);
  out.jacobian.topLeftCorner(nu, nu) = juu + conv_u + dconv_u;
  out.jacobian.block(0, nu, nu, n) = div.transpose();
  out.jacobian.block(0, nu + n, nu, n) = w.buoy * o.buoyancy;
  out.jacobian.block(nu, 0, n, nu) = div;
  out.jacobian.block(nu + n, 0, n, nu) = jtu + dconv_t;
  out.jacobian.bottomRightCorner(n, n) = jtt + conv_t;
  return out;
}

ReducedSolution rb_solve(const ParameterPoint& mu, const ReducedModel& model, const NewtonOptions& options,
                         const Vector* initial) {
  if (!model.box.contains(mu)) throw InvalidArgument("rb_solve: parameter outside the box");
  const int n = model.size();
  if (n == 0) throw InvalidArgument("rb_solve: empty reduced basis");
  const int nearest = nearest_snapshot(model, mu);
  const bool have_snapshots = nearest >= 0 && nearest < static_cast<int>(model.snapshot_coordinates.size());
  Vector x0 = Vector::Zero(4 * n);
  if (initial != nullptr) {
    x0 = *initial;
  } else if (have_snapshots) {
    x0 = model.snapshot_coordinates[nearest];
  }
  try {
    return newton(mu, model, options, x0);
  } catch (const NewtonDivergence&) {
    if (!have_snapshots) throw;
  }
  // Continuation along the segment from the nearest snapshot parameter.
  const ParameterPoint start = model.basis.parameters[nearest];
  for (int steps : {4, 16}) {
    try {
      Vector x = model.snapshot_coordinates[nearest];
      ReducedSolution last;
      for (int k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        ParameterPoint p;
        p.rayleigh = std::exp((1.0 - t) * std::log(std::max(start.rayleigh, 1e-300)) +
                              t * std::log(std::max(mu.rayleigh, 1e-300)));
        if (start.rayleigh <= 0.0 || mu.rayleigh <= 0.0) p.rayleigh = (1.0 - t) * start.rayleigh + t * mu.rayleigh;
        p.height = (1.0 - t) * start.height + t * mu.height;
        if (k == steps) p = mu;
        last = newton(p, model, options, x);
        x = last.coordinates();
      }
      return last;
    } catch (const NewtonDivergence&) {
    }
  }
  throw NewtonDivergence("rb_solve: Newton and continuation both diverged");
}

FESolution reconstruct(const Vector& x, const ParameterPoint& mu, const ReducedBasisSpace& space) {
  const int n = space.size();
  if (x.size() != 4 * n) throw InvalidArgument("reconstruct: coordinate size mismatch");
  FESolution s;
  s.parameter = mu;
  s.velocity = space.velocity * x.head(2 * n);
  s.pressure = space.pressure * x.segment(2 * n, n);
  s.temperature = space.temperature * x.tail(n);
  return s;
}

FESolution reconstruct(const ReducedSolution& reduced, const ReducedBasisSpace& space) {
  return reconstruct(reduced.coordinates(), reduced.parameter, space);
}

Vector project_solution(const FESolution& s, const ReducedBasisSpace& space, const FullOrderModel& model) {
  const auto& fe = model.space();
  const SparseMatrix kv = block_diagonal(fe.stiffness());
  const int n = space.size();
  Vector x(4 * n);
  x.head(2 * n) = space.velocity.transpose() * (kv * s.velocity);
  x.segment(2 * n, n) = space.pressure.transpose() * (fe.p1_mass() * s.pressure);
  x.tail(n) = space.temperature.transpose() * (fe.stiffness() * s.temperature);
  return x;
}

double residual_dual_norm(const ReducedSolution& reduced, const ReducedModel& model) {
  const ParameterPoint& mu = reduced.parameter;
  const Weights w = weights(mu, model.constants.prandtl);
  const Vector& a = reduced.velocity;
  const Vector& b = reduced.pressure;
  const Vector& c = reduced.temperature;
  const Vector& sg = reduced.sigma;
  using R = ResidualTerm;
  double total = 0.0;
  for (int blk = 0; blk < 3; ++blk) {
    const auto& comps = model.riesz.components[blk];
    Vector coef(static_cast<Eigen::Index>(comps.size()));
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const auto& cp = comps[k];
      const int i = cp.first;
      const int j = cp.second;
      double v = 0.0;
      switch (cp.term) {
        case R::velocity_diffusion_x: v = w.vdx * a[i]; break;
        case R::velocity_diffusion_y: v = w.vdy * a[i]; break;
        case R::pressure_gradient_x: v = w.divx * b[i]; break;
        case R::pressure_gradient_y: v = w.divy * b[i]; break;
        case R::buoyancy: v = w.buoy * c[i]; break;
        case R::buoyancy_lift: v = w.buoy; break;
        case R::convection_velocity_x: v = w.cx * a[i] * a[j]; break;
        case R::convection_velocity_y: v = w.cy * a[i] * a[j]; break;
        case R::eddy_velocity_x: v = w.evx * sg[i] * a[j]; break;
        case R::eddy_velocity_y: v = w.evy * sg[i] * a[j]; break;
        case R::divergence_x: v = w.divx * a[i]; break;
        case R::divergence_y: v = w.divy * a[i]; break;
        case R::temperature_diffusion_x: v = w.tdx * c[i]; break;
        case R::temperature_diffusion_y: v = w.tdy * c[i]; break;
        case R::temperature_diffusion_lift_x: v = w.tdx; break;
        case R::temperature_diffusion_lift_y: v = w.tdy; break;
        case R::convection_temperature_x: v = w.cx * a[i] * c[j]; break;
        case R::convection_temperature_y: v = w.cy * a[i] * c[j]; break;
        case R::lift_convection: v = w.lift * a[i]; break;
        case R::eddy_temperature_x: v = w.etx * sg[i] * c[j]; break;
        case R::eddy_temperature_y: v = w.ety * sg[i] * c[j]; break;
      }
      coef[static_cast<Eigen::Index>(k)] = v;
    }
    if (coef.size() > 0) total += (model.riesz.factors[blk] * coef).squaredNorm();
  }
  return std::sqrt(total);
}

double residual_dual_norm_direct(const ReducedSolution& reduced, const ReducedModel& model,
                                 const FullOrderModel& fom, bool use_eim) {
  const FESolution s = reconstruct(reduced, model.basis);
  if (use_eim) {
    const Vector nu = model.eim.expand(reduced.sigma);
    return fom.dual_norm(fom.residual(s, &nu));
  }
  return fom.dual_norm(fom.residual(s));
}

}  // namespace cavityrb

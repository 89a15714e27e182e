#include "cavityrb/assembly.hpp"

#include <cmath>

namespace cavityrb {

namespace {

using Local6 = Eigen::Matrix<double, 6, 6>;

// Loops over elements, lets `local` fill an R x C element matrix and scatters it
// through the row/column node maps.
template <int R, int C, typename RowMap, typename ColMap, typename Local>
SparseMatrix assemble(const FESpace& space, int rows, int cols, RowMap&& row_map, ColMap&& col_map,
                      Local&& local) {
  const int nt = space.mesh().num_triangles();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(nt) * R * C);
  Eigen::Matrix<double, R, C> ke;
  for (int t = 0; t < nt; ++t) {
    ke.setZero();
    local(t, ke);
    for (int i = 0; i < R; ++i) {
      const int gi = row_map(t, i);
      for (int j = 0; j < C; ++j) trips.emplace_back(gi, col_map(t, j), ke(i, j));
    }
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

template <typename Local>
SparseMatrix assemble_p2(const FESpace& space, Local&& local) {
  const auto& layout = space.layout();
  auto map = [&](int t, int i) { return layout.p2_nodes(t)[i]; };
  return assemble<6, 6>(space, layout.num_p2(), layout.num_p2(), map, map,
                        std::forward<Local>(local));
}

// Velocity-component map for 12-wide element blocks: [u1 nodes, u2 nodes].
auto velocity_map(const DofLayout& layout) {
  return [&layout](int t, int i) { return (i / 6) * layout.num_p2() + layout.p2_nodes(t)[i % 6]; };
}

SparseMatrix divergence_block(const FESpace& space, int component) {
  const auto& layout = space.layout();
  const auto& v1 = FESpace::p1_values();
  auto rows = [&](int t, int i) { return layout.p1_nodes(t)[i]; };
  auto cols = [&](int t, int j) { return component * layout.num_p2() + layout.p2_nodes(t)[j]; };
  return assemble<3, 6>(space, layout.num_p1(), layout.velocity_size(), rows, cols,
                        [&](int t, Eigen::Matrix<double, 3, 6>& ke) {
                          const auto& e = space.element(t);
                          for (int q = 0; q < 6; ++q) {
                            const double w = space.quadrature_weights()[6 * t + q];
                            ke.noalias() -= w * v1.row(q).transpose() * e.grad[q].col(component).transpose();
                          }
                        });
}

SparseMatrix buoyancy_block(const FESpace& space) {
  const auto& layout = space.layout();
  const int n2 = layout.num_p2();
  SparseMatrix m = -space.p2_mass();
  std::vector<Triplet> trips;
  trips.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      trips.emplace_back(n2 + it.row(), it.col(), it.value());
    }
  }
  SparseMatrix out(2 * n2, n2);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

double eddy_viscosity(double dx_u1, double dy_u1, double dx_u2, double dy_u2, double height,
                      double c_s, int n_h) {
  const double inv2 = 1.0 / (height * height);
  const double s = std::sqrt(dx_u1 * dx_u1 + dy_u1 * dy_u1 * inv2 + dx_u2 * dx_u2 + dy_u2 * dy_u2 * inv2);
  return c_s * c_s * (height * height + 1.0) / (static_cast<double>(n_h) * n_h) * s;
}

Vector eddy_viscosity_field(const FESpace& space, const Vector& velocity, double height, double c_s) {
  const int n2 = space.layout().num_p2();
  const auto g1 = space.evaluate_fluctuation(velocity.head(n2));
  const auto g2 = space.evaluate_fluctuation(velocity.tail(n2));
  const int n_h = space.mesh().divisions();
  Vector nu(space.num_quadrature_points());
  for (int q = 0; q < nu.size(); ++q) {
    nu[q] = eddy_viscosity(g1.dx[q], g1.dy[q], g2.dx[q], g2.dy[q], height, c_s, n_h);
  }
  return nu;
}

double theta_coefficient(AffineTerm term, const ParameterPoint& mu, double prandtl) {
  const double g = mu.height;
  switch (term) {
    case AffineTerm::velocity_diffusion_x: return prandtl * g;
    case AffineTerm::velocity_diffusion_y: return prandtl / g;
    case AffineTerm::divergence_x: return g;
    case AffineTerm::divergence_y: return 1.0;
    case AffineTerm::buoyancy: return prandtl * mu.rayleigh * g;
    case AffineTerm::temperature_diffusion_x: return g;
    case AffineTerm::temperature_diffusion_y: return 1.0 / g;
    case AffineTerm::lift_convection: return g;
    case AffineTerm::convection_x: return g;
    case AffineTerm::convection_y: return 1.0;
    case AffineTerm::eddy_velocity_x: return g;
    case AffineTerm::eddy_velocity_y: return 1.0 / g;
    case AffineTerm::eddy_temperature_x: return g / prandtl;
    case AffineTerm::eddy_temperature_y: return 1.0 / (prandtl * g);
  }
  return 0.0;
}

SparseMatrix block_diagonal(const SparseMatrix& scalar) {
  const int n = static_cast<int>(scalar.rows());
  std::vector<Triplet> trips;
  trips.reserve(2 * scalar.nonZeros());
  for (int k = 0; k < scalar.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(scalar, k); it; ++it) {
      trips.emplace_back(it.row(), it.col(), it.value());
      trips.emplace_back(n + it.row(), n + it.col(), it.value());
    }
  }
  SparseMatrix out(2 * n, 2 * n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

AffineOperatorSet assemble_affine(const FESpace& reference) {
  const auto& layout = reference.layout();
  if (layout.velocity_free().empty() || layout.temperature_free().empty()) {
    throw InvalidArgument("assemble_affine: layout has no free dofs");
  }
  AffineOperatorSet set;
  set.velocity_diffusion_x = block_diagonal(reference.stiffness_xx());
  set.velocity_diffusion_y = block_diagonal(reference.stiffness_yy());
  set.divergence_x = divergence_block(reference, 0);
  set.divergence_y = divergence_block(reference, 1);
  set.buoyancy = buoyancy_block(reference);
  set.temperature_diffusion_x = reference.stiffness_xx();
  set.temperature_diffusion_y = reference.stiffness_yy();
  set.lift = lift_vector(reference);
  const auto lift_q = reference.evaluate(set.lift);
  set.lift_convection = assemble_advected_gradient(reference, lift_q, 1.0, 0.0);
  set.velocity_mass = block_diagonal(reference.p2_mass());
  return set;
}

OriginalDomainOperators assemble_on_original(const UniformMesh& mesh, const ParameterPoint& mu,
                                             double prandtl) {
  const FESpace mapped(mesh, mu.height);
  const AffineOperatorSet raw = assemble_affine(mapped);
  OriginalDomainOperators o;
  o.velocity_diffusion_x = prandtl * raw.velocity_diffusion_x;
  o.velocity_diffusion_y = prandtl * raw.velocity_diffusion_y;
  o.divergence_x = raw.divergence_x;
  o.divergence_y = raw.divergence_y;
  o.buoyancy = (prandtl * mu.rayleigh) * raw.buoyancy;
  o.temperature_diffusion_x = raw.temperature_diffusion_x;
  o.temperature_diffusion_y = raw.temperature_diffusion_y;
  o.lift_convection = raw.lift_convection;
  return o;
}

OriginalDomainOperators combine_affine(const AffineOperatorSet& set, const ParameterPoint& mu,
                                       double prandtl) {
  auto c = [&](AffineTerm t) { return theta_coefficient(t, mu, prandtl); };
  OriginalDomainOperators o;
  o.velocity_diffusion_x = c(AffineTerm::velocity_diffusion_x) * set.velocity_diffusion_x;
  o.velocity_diffusion_y = c(AffineTerm::velocity_diffusion_y) * set.velocity_diffusion_y;
  o.divergence_x = c(AffineTerm::divergence_x) * set.divergence_x;
  o.divergence_y = c(AffineTerm::divergence_y) * set.divergence_y;
  o.buoyancy = c(AffineTerm::buoyancy) * set.buoyancy;
  o.temperature_diffusion_x = c(AffineTerm::temperature_diffusion_x) * set.temperature_diffusion_x;
  o.temperature_diffusion_y = c(AffineTerm::temperature_diffusion_y) * set.temperature_diffusion_y;
  o.lift_convection = c(AffineTerm::lift_convection) * set.lift_convection;
  return o;
}

SparseMatrix assemble_convection(const FESpace& space, const Vector& a1, const Vector& a2, double cx,
                                 double cy) {
  const auto& v2 = FESpace::p2_values();
  const Vector& w = space.quadrature_weights();
  return assemble_p2(space, [&](int t, Local6& ke) {
    const auto& e = space.element(t);
    for (int q = 0; q < 6; ++q) {
      const int g = 6 * t + q;
      const Eigen::Matrix<double, 6, 1> adv = cx * a1[g] * e.grad[q].col(0) + cy * a2[g] * e.grad[q].col(1);
      ke.noalias() += w[g] * v2.row(q).transpose() * adv.transpose();
    }
  });
}

SparseMatrix assemble_fluctuation_diffusion(const FESpace& space, const Vector& nu, double cx,
                                            double cy) {
  const Vector& w = space.quadrature_weights();
  return assemble_p2(space, [&](int t, Local6& ke) {
    const auto& e = space.element(t);
    for (int q = 0; q < 6; ++q) {
      const int g = 6 * t + q;
      const auto& fg = e.fluct_grad[q];
      ke.noalias() += (w[g] * nu[g] * cx) * fg.col(0) * fg.col(0).transpose();
      ke.noalias() += (w[g] * nu[g] * cy) * fg.col(1) * fg.col(1).transpose();
    }
  });
}

SparseMatrix assemble_advected_gradient(const FESpace& space, const QuadratureValues& f, double cx,
                                        double cy) {
  const auto& layout = space.layout();
  const auto& v2 = FESpace::p2_values();
  const Vector& w = space.quadrature_weights();
  auto rows = [&](int t, int i) { return layout.p2_nodes(t)[i]; };
  return assemble<6, 12>(space, layout.num_p2(), layout.velocity_size(), rows, velocity_map(layout),
                         [&](int t, Eigen::Matrix<double, 6, 12>& ke) {
                           for (int q = 0; q < 6; ++q) {
                             const int g = 6 * t + q;
                             const auto phi = v2.row(q);
                             ke.leftCols<6>().noalias() += (w[g] * cx * f.dx[g]) * phi.transpose() * phi;
                             ke.rightCols<6>().noalias() += (w[g] * cy * f.dy[g]) * phi.transpose() * phi;
                           }
                         });
}

SparseMatrix assemble_eddy_derivative(const FESpace& space, const Vector& velocity, double height,
                                      double c_s) {
  const auto& layout = space.layout();
  const int n2 = layout.num_p2();
  const auto g1 = space.evaluate_fluctuation(velocity.head(n2));
  const auto g2 = space.evaluate_fluctuation(velocity.tail(n2));
  const Vector& w = space.quadrature_weights();
  const int n_h = space.mesh().divisions();
  const double k = c_s * c_s * (height * height + 1.0) / (static_cast<double>(n_h) * n_h);
  const double inv2 = 1.0 / (height * height);
  auto map = velocity_map(layout);
  return assemble<12, 12>(space, 2 * n2, 2 * n2, map, map, [&](int t, Eigen::Matrix<double, 12, 12>& ke) {
    const auto& e = space.element(t);
    for (int q = 0; q < 6; ++q) {
      const int g = 6 * t + q;
      const double s = std::sqrt(g1.dx[g] * g1.dx[g] + g1.dy[g] * g1.dy[g] * inv2 + g2.dx[g] * g2.dx[g] +
                                 g2.dy[g] * g2.dy[g] * inv2);
      if (s <= 0.0) continue;
      const auto& fg = e.fluct_grad[q];
      Eigen::Matrix<double, 12, 1> test;
      test.head<6>() = height * g1.dx[g] * fg.col(0) + inv2 * height * g1.dy[g] * fg.col(1);
      test.tail<6>() = height * g2.dx[g] * fg.col(0) + inv2 * height * g2.dy[g] * fg.col(1);
      Eigen::Matrix<double, 12, 1> dnu;
      dnu.head<6>() = (k / s) * (g1.dx[g] * fg.col(0) + inv2 * g1.dy[g] * fg.col(1));
      dnu.tail<6>() = (k / s) * (g2.dx[g] * fg.col(0) + inv2 * g2.dy[g] * fg.col(1));
      ke.noalias() += w[g] * test * dnu.transpose();
    }
  });
}

Vector integrate_against_p2(const FESpace& space, const Vector& g) {
  const auto& layout = space.layout();
  const auto& v2 = FESpace::p2_values();
  Vector out = Vector::Zero(layout.num_p2());
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& nodes = layout.p2_nodes(t);
    const Eigen::Matrix<double, 6, 1> gq = g.segment<6>(6 * t);
    const Eigen::Matrix<double, 6, 1> local = v2.transpose() * gq;
    for (int i = 0; i < 6; ++i) out[nodes[i]] += local[i];
  }
  return out;
}

Vector integrate_against_fluctuation_gradient(const FESpace& space, const Vector& gx, const Vector& gy) {
  const auto& layout = space.layout();
  Vector out = Vector::Zero(layout.num_p2());
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& nodes = layout.p2_nodes(t);
    const auto& e = space.element(t);
    Eigen::Matrix<double, 6, 1> local = Eigen::Matrix<double, 6, 1>::Zero();
    for (int q = 0; q < 6; ++q) {
      local += gx[6 * t + q] * e.fluct_grad[q].col(0) + gy[6 * t + q] * e.fluct_grad[q].col(1);
    }
    for (int i = 0; i < 6; ++i) out[nodes[i]] += local[i];
  }
  return out;
}

NonlinearContributions evaluate_nonlinear_forms(const FESpace& space, const Vector& velocity,
                                                const Vector& temperature, const ParameterPoint& mu,
                                                const PhysicalConstants& constants, const Vector* nu) {
  const int n2 = space.layout().num_p2();
  const auto u1 = space.evaluate(velocity.head(n2));
  const auto u2 = space.evaluate(velocity.tail(n2));
  const double pr = constants.prandtl;
  auto c = [&](AffineTerm t) { return theta_coefficient(t, mu, pr); };
  const SparseMatrix conv = assemble_convection(space, u1.value, u2.value, c(AffineTerm::convection_x),
                                                c(AffineTerm::convection_y));
  const Vector nu_field =
      nu ? *nu : eddy_viscosity_field(space, velocity, mu.height, constants.smagorinsky);
  const SparseMatrix su = assemble_fluctuation_diffusion(space, nu_field, c(AffineTerm::eddy_velocity_x),
                                                         c(AffineTerm::eddy_velocity_y));
  const SparseMatrix st = assemble_fluctuation_diffusion(space, nu_field, c(AffineTerm::eddy_temperature_x),
                                                         c(AffineTerm::eddy_temperature_y));
  NonlinearContributions out;
  out.convection_velocity.resize(2 * n2);
  out.eddy_velocity.resize(2 * n2);
  for (int comp = 0; comp < 2; ++comp) {
    out.convection_velocity.segment(comp * n2, n2) = conv * velocity.segment(comp * n2, n2);
    out.eddy_velocity.segment(comp * n2, n2) = su * velocity.segment(comp * n2, n2);
  }
  out.convection_temperature = conv * temperature;
  out.eddy_temperature = st * temperature;
  return out;
}

}  // namespace cavityrb

#include "cavityrb/fe_space.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace cavityrb {

namespace {

using Bary = std::array<double, 3>;

// Shape function values and barycentric derivatives of the six P2 functions.
double p2_value(int i, const Bary& l) {
  switch (i) {
    case 0: return l[0] * (2.0 * l[0] - 1.0);
    case 1: return l[1] * (2.0 * l[1] - 1.0);
    case 2: return l[2] * (2.0 * l[2] - 1.0);
    case 3: return 4.0 * l[0] * l[1];
    case 4: return 4.0 * l[1] * l[2];
    default: return 4.0 * l[2] * l[0];
  }
}

Eigen::Vector3d p2_dbary(int i, const Bary& l) {
  Eigen::Vector3d d = Eigen::Vector3d::Zero();
  switch (i) {
    case 0: d[0] = 4.0 * l[0] - 1.0; break;
    case 1: d[1] = 4.0 * l[1] - 1.0; break;
    case 2: d[2] = 4.0 * l[2] - 1.0; break;
    case 3: d[0] = 4.0 * l[1]; d[1] = 4.0 * l[0]; break;
    case 4: d[1] = 4.0 * l[2]; d[2] = 4.0 * l[1]; break;
    default: d[2] = 4.0 * l[0]; d[0] = 4.0 * l[2]; break;
  }
  return d;
}

}  // namespace

const std::array<std::array<double, 3>, TriangleQuadrature::kPoints>& TriangleQuadrature::points() {
  static const std::array<std::array<double, 3>, kPoints> pts = [] {
    constexpr double a1 = 0.445948490915965;
    constexpr double b1 = 1.0 - 2.0 * a1;
    constexpr double a2 = 0.091576213509771;
    constexpr double b2 = 1.0 - 2.0 * a2;
    return std::array<std::array<double, 3>, kPoints>{{{a1, a1, b1},
                                                       {a1, b1, a1},
                                                       {b1, a1, a1},
                                                       {a2, a2, b2},
                                                       {a2, b2, a2},
                                                       {b2, a2, a2}}};
  }();
  return pts;
}

const std::array<double, TriangleQuadrature::kPoints>& TriangleQuadrature::weights() {
  static const std::array<double, kPoints> w = [] {
    constexpr double w1 = 0.223381589678011;
    constexpr double w2 = 0.109951743655322;
    return std::array<double, kPoints>{w1, w1, w1, w2, w2, w2};
  }();
  return w;
}

// ---------------------------------------------------------------------------
// DofLayout

DofLayout::DofLayout(const UniformMesh& mesh) {
  const int n = mesh.divisions();
  const int nv = n + 1;
  side_ = 2 * n + 1;
  np2_ = side_ * side_;
  np1_ = mesh.num_vertices();

  auto fine = [&](int vertex) {
    const int i = vertex % nv;
    const int j = vertex / nv;
    return std::array<int, 2>{2 * i, 2 * j};
  };
  auto node = [&](int fi, int fj) { return fj * side_ + fi; };

  p2_.reserve(mesh.num_triangles());
  p1_.reserve(mesh.num_triangles());
  for (const auto& t : mesh.triangles()) {
    const auto a = fine(t[0]);
    const auto b = fine(t[1]);
    const auto c = fine(t[2]);
    p2_.push_back({node(a[0], a[1]), node(b[0], b[1]), node(c[0], c[1]),
                   node((a[0] + b[0]) / 2, (a[1] + b[1]) / 2),
                   node((b[0] + c[0]) / 2, (b[1] + c[1]) / 2),
                   node((c[0] + a[0]) / 2, (c[1] + a[1]) / 2)});
    p1_.push_back(t);
  }

  vel_free_index_.assign(2 * np2_, -1);
  temp_free_index_.assign(np2_, -1);
  for (int comp = 0; comp < 2; ++comp) {
    for (int k = 0; k < np2_; ++k) {
      const int fi = k % side_;
      const int fj = k / side_;
      const bool wall = fi == 0 || fj == 0 || fi == side_ - 1 || fj == side_ - 1;
      const int dof = comp * np2_ + k;
      if (wall) {
        vel_dirichlet_.push_back(dof);
      } else {
        vel_free_index_[dof] = static_cast<int>(vel_free_.size());
        vel_free_.push_back(dof);
      }
    }
  }
  for (int k = 0; k < np2_; ++k) {
    const int fi = k % side_;
    if (fi == 0 || fi == side_ - 1) {
      temp_dirichlet_.push_back(k);
    } else {
      temp_free_index_[k] = static_cast<int>(temp_free_.size());
      temp_free_.push_back(k);
    }
  }
}

Eigen::Vector2d DofLayout::p2_coordinate(int node) const {
  const double h = 1.0 / (side_ - 1);
  return {(node % side_) * h, (node / side_) * h};
}

int DofLayout::p1_of_p2(int node) const {
  const int fi = node % side_;
  const int fj = node / side_;
  if (fi % 2 != 0 || fj % 2 != 0) return -1;
  return (fj / 2) * ((side_ - 1) / 2 + 1) + fi / 2;
}

// ---------------------------------------------------------------------------
// FESpace

const Eigen::Matrix<double, 6, 6>& FESpace::p2_values() {
  static const Eigen::Matrix<double, 6, 6> v = [] {
    Eigen::Matrix<double, 6, 6> m;
    for (int q = 0; q < 6; ++q) {
      for (int i = 0; i < 6; ++i) m(q, i) = p2_value(i, TriangleQuadrature::points()[q]);
    }
    return m;
  }();
  return v;
}

const Eigen::Matrix<double, 6, 3>& FESpace::p1_values() {
  static const Eigen::Matrix<double, 6, 3> v = [] {
    Eigen::Matrix<double, 6, 3> m;
    for (int q = 0; q < 6; ++q) {
      for (int i = 0; i < 3; ++i) m(q, i) = TriangleQuadrature::points()[q][i];
    }
    return m;
  }();
  return v;
}

FESpace::FESpace(const UniformMesh& mesh, double geometry_height)
    : mesh_(mesh), layout_(mesh), height_(geometry_height) {
  if (!(geometry_height > 0.0)) {
    throw InvalidArgument("FESpace: geometry height must be positive");
  }
  const int nt = mesh_.num_triangles();
  tab_.resize(nt);
  weights_.resize(6 * nt);
  const auto& qp = TriangleQuadrature::points();
  const auto& qw = TriangleQuadrature::weights();

  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles()[t];
    const Eigen::Vector2d p0 = map_to_original(mesh_.vertices()[tri[0]], height_);
    const Eigen::Vector2d p1 = map_to_original(mesh_.vertices()[tri[1]], height_);
    const Eigen::Vector2d p2 = map_to_original(mesh_.vertices()[tri[2]], height_);
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    auto& e = tab_[t];
    e.area = 0.5 * det;
    e.p1_grad << p1.y() - p2.y(), p2.x() - p1.x(),  //
        p2.y() - p0.y(), p0.x() - p2.x(),          //
        p0.y() - p1.y(), p1.x() - p0.x();
    e.p1_grad /= det;
    for (int q = 0; q < 6; ++q) {
      for (int i = 0; i < 6; ++i) {
        const Eigen::Vector3d d = p2_dbary(i, qp[q]);
        const Eigen::Vector2d g = e.p1_grad.transpose() * d;
        e.grad[q].row(i) = g.transpose();
        e.fluct_grad[q].row(i) = g.transpose();
        if (i < 3) e.fluct_grad[q].row(i) -= e.p1_grad.row(i);
      }
      weights_[6 * t + q] = qw[q] * e.area;
    }
  }

  const int n2 = layout_.num_p2();
  const int n1 = layout_.num_p1();
  std::vector<Triplet> txx, tyy, tm2, tm1;
  txx.reserve(36 * nt);
  tyy.reserve(36 * nt);
  tm2.reserve(36 * nt);
  tm1.reserve(9 * nt);
  mean_ = Vector::Zero(n1);
  const auto& v2 = p2_values();
  const auto& v1 = p1_values();
  for (int t = 0; t < nt; ++t) {
    const auto& e = tab_[t];
    const auto& nodes = layout_.p2_nodes(t);
    const auto& pn = layout_.p1_nodes(t);
    Eigen::Matrix<double, 6, 6> kx = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 6> ky = kx;
    Eigen::Matrix<double, 6, 6> m = kx;
    Eigen::Matrix3d m1 = Eigen::Matrix3d::Zero();
    for (int q = 0; q < 6; ++q) {
      const double w = weights_[6 * t + q];
      kx.noalias() += w * e.grad[q].col(0) * e.grad[q].col(0).transpose();
      ky.noalias() += w * e.grad[q].col(1) * e.grad[q].col(1).transpose();
      m.noalias() += w * v2.row(q).transpose() * v2.row(q);
      m1.noalias() += w * v1.row(q).transpose() * v1.row(q);
      for (int i = 0; i < 3; ++i) mean_[pn[i]] += w * v1(q, i);
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        txx.emplace_back(nodes[i], nodes[j], kx(i, j));
        tyy.emplace_back(nodes[i], nodes[j], ky(i, j));
        tm2.emplace_back(nodes[i], nodes[j], m(i, j));
      }
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) tm1.emplace_back(pn[i], pn[j], m1(i, j));
    }
  }
  kxx_.resize(n2, n2);
  kxx_.setFromTriplets(txx.begin(), txx.end());
  kyy_.resize(n2, n2);
  kyy_.setFromTriplets(tyy.begin(), tyy.end());
  k_ = kxx_ + kyy_;
  m2_.resize(n2, n2);
  m2_.setFromTriplets(tm2.begin(), tm2.end());
  m1_.resize(n1, n1);
  m1_.setFromTriplets(tm1.begin(), tm1.end());
}

Eigen::Vector2d FESpace::quadrature_point(int q) const {
  const int t = q / 6;
  const auto& b = TriangleQuadrature::points()[q % 6];
  const auto& tri = mesh_.triangles()[t];
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int i = 0; i < 3; ++i) p += b[i] * mesh_.vertices()[tri[i]];
  return map_to_original(p, height_);
}

QuadratureValues FESpace::evaluate(const Vector& p2) const {
  const int nq = num_quadrature_points();
  QuadratureValues out{Vector(nq), Vector(nq), Vector(nq)};
  const auto& v2 = p2_values();
  for (int t = 0; t < mesh_.num_triangles(); ++t) {
    const auto& nodes = layout_.p2_nodes(t);
    Eigen::Matrix<double, 6, 1> c;
    for (int i = 0; i < 6; ++i) c[i] = p2[nodes[i]];
    for (int q = 0; q < 6; ++q) {
      const int g = 6 * t + q;
      out.value[g] = v2.row(q).dot(c);
      const Eigen::Vector2d grad = tab_[t].grad[q].transpose() * c;
      out.dx[g] = grad.x();
      out.dy[g] = grad.y();
    }
  }
  return out;
}

QuadratureValues FESpace::evaluate_fluctuation(const Vector& p2) const {
  const int nq = num_quadrature_points();
  QuadratureValues out{Vector(nq), Vector(nq), Vector(nq)};
  const auto& v2 = p2_values();
  const auto& v1 = p1_values();
  for (int t = 0; t < mesh_.num_triangles(); ++t) {
    const auto& nodes = layout_.p2_nodes(t);
    Eigen::Matrix<double, 6, 1> c;
    for (int i = 0; i < 6; ++i) c[i] = p2[nodes[i]];
    for (int q = 0; q < 6; ++q) {
      const int g = 6 * t + q;
      out.value[g] = v2.row(q).dot(c) - v1.row(q).dot(c.head<3>());
      const Eigen::Vector2d grad = tab_[t].fluct_grad[q].transpose() * c;
      out.dx[g] = grad.x();
      out.dy[g] = grad.y();
    }
  }
  return out;
}

Vector FESpace::evaluate_p1(const Vector& p1) const {
  Vector out(num_quadrature_points());
  const auto& v1 = p1_values();
  for (int t = 0; t < mesh_.num_triangles(); ++t) {
    const auto& pn = layout_.p1_nodes(t);
    const Eigen::Vector3d c(p1[pn[0]], p1[pn[1]], p1[pn[2]]);
    for (int q = 0; q < 6; ++q) out[6 * t + q] = v1.row(q).dot(c);
  }
  return out;
}

// ---------------------------------------------------------------------------

FESolution zero_solution(const FESpace& space, const ParameterPoint& mu) {
  const auto& l = space.layout();
  return {mu, Vector::Zero(l.velocity_size()), Vector::Zero(l.temperature_size()),
          Vector::Zero(l.pressure_size())};
}

XNormParts x_norm_parts(const FESpace& space, const FESolution& s) {
  const int n2 = space.layout().num_p2();
  const auto& k = space.stiffness();
  XNormParts parts;
  for (int c = 0; c < 2; ++c) {
    const auto u = s.velocity.segment(c * n2, n2);
    parts.velocity += u.dot(k * u);
  }
  parts.temperature = s.temperature.dot(k * s.temperature);
  parts.pressure = s.pressure.dot(space.p1_mass() * s.pressure);
  return parts;
}

double x_norm(const FESpace& space, const FESolution& s) {
  const auto p = x_norm_parts(space, s);
  return std::sqrt(std::max(0.0, p.velocity + p.temperature + p.pressure));
}

Vector vms_project(const DofLayout& layout, const Vector& p2) {
  const int side = layout.fine_side();
  Vector out(p2.size());
  for (int k = 0; k < layout.num_p2(); ++k) {
    const int fi = k % side;
    const int fj = k / side;
    const bool odd_i = fi % 2 != 0;
    const bool odd_j = fj % 2 != 0;
    if (!odd_i && !odd_j) {
      out[k] = p2[k];
    } else if (odd_i && !odd_j) {
      out[k] = 0.5 * (p2[k - 1] + p2[k + 1]);
    } else if (!odd_i && odd_j) {
      out[k] = 0.5 * (p2[k - side] + p2[k + side]);
    } else {
      // Midpoint of the lower-left to upper-right cell diagonal.
      out[k] = 0.5 * (p2[k - side - 1] + p2[k + side + 1]);
    }
  }
  return out;
}

Vector vms_fluctuation(const DofLayout& layout, const Vector& p2) {
  return p2 - vms_project(layout, p2);
}

Vector vms_project_velocity(const DofLayout& layout, const Vector& velocity) {
  const int n2 = layout.num_p2();
  Vector out(velocity.size());
  out.head(n2) = vms_project(layout, velocity.head(n2));
  out.tail(n2) = vms_project(layout, velocity.tail(n2));
  return out;
}

double lift_function(double x, double /*y*/) { return 1.0 - x; }

Vector lift_vector(const FESpace& space) { return space.interpolate_p2(lift_function); }

Vector apply_lift(const FESpace& space, const Vector& raw_temperature) {
  const Vector lift = lift_vector(space);
  if (raw_temperature.size() != lift.size()) {
    throw InvalidArgument("apply_lift: temperature vector has wrong size");
  }
  for (int k : space.layout().temperature_dirichlet()) {
    if (std::abs(raw_temperature[k] - lift[k]) > 1e-10) {
      throw InvalidArgument("apply_lift: wall temperature violated at node " + std::to_string(k));
    }
  }
  Vector out = raw_temperature - lift;
  for (int k : space.layout().temperature_dirichlet()) out[k] = 0.0;
  return out;
}

Vector remove_lift(const FESpace& space, const Vector& fluctuation) {
  return fluctuation + lift_vector(space);
}

Vector zero_mean(const FESpace& space, const Vector& pressure) {
  const Vector& m = space.pressure_mean_weights();
  return pressure.array() - m.dot(pressure) / m.sum();
}

void write_vtk_solution(std::ostream& out, const FESpace& space, const FESolution& s) {
  const auto& mesh = space.mesh();
  const auto& layout = space.layout();
  write_vtk_mesh(out, mesh, s.parameter.height);
  const int n2 = layout.num_p2();
  const int side = layout.fine_side();
  const int nv = mesh.divisions() + 1;
  const Vector raw = remove_lift(space, s.temperature);
  auto p2_of_vertex = [&](int v) { return 2 * (v / nv) * side + 2 * (v % nv); };
  out << "POINT_DATA " << mesh.num_vertices() << '\n';
  out << "VECTORS velocity double\n";
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const int k = p2_of_vertex(v);
    out << s.velocity[k] << ' ' << s.velocity[n2 + k] << " 0\n";
  }
  out << "SCALARS temperature double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < mesh.num_vertices(); ++v) out << raw[p2_of_vertex(v)] << '\n';
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < mesh.num_vertices(); ++v) out << s.pressure[v] << '\n';
}

}  // namespace cavityrb

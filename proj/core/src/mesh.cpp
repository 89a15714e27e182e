#include "cavityrb/mesh.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace cavityrb {

namespace {

constexpr double kBoundaryTol = 1e-12;

}  // namespace

bool ParameterBox::contains(const ParameterPoint& mu, double rel_tol) const {
  auto inside = [rel_tol](double v, double lo, double hi) {
    const double slack = rel_tol * std::max(std::abs(lo), std::abs(hi));
    return v >= lo - slack && v <= hi + slack;
  };
  return mu.rayleigh > 0.0 && mu.height > 0.0 && inside(mu.rayleigh, ra_min, ra_max) &&
         inside(mu.height, height_min, height_max);
}

Eigen::Vector2d ParameterBox::scaled(const ParameterPoint& mu) const {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  if (!rayleigh_fixed()) {
    s[0] = (std::log10(mu.rayleigh) - std::log10(ra_min)) / (std::log10(ra_max) - std::log10(ra_min));
  }
  if (!height_fixed()) {
    s[1] = (mu.height - height_min) / (height_max - height_min);
  }
  return s;
}

UniformMesh::UniformMesh(int divisions_per_side) : n_(divisions_per_side) {
  if (n_ < 2) {
    throw InvalidArgument("build_uniform_mesh: divisions_per_side must be >= 2, got " +
                          std::to_string(n_));
  }
  const int nv = n_ + 1;
  vertices_.reserve(static_cast<std::size_t>(nv) * nv);
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nv; ++i) {
      vertices_.emplace_back(static_cast<double>(i) / n_, static_cast<double>(j) / n_);
    }
  }
  triangles_.reserve(2 * static_cast<std::size_t>(n_) * n_);
  for (int j = 0; j < n_; ++j) {
    for (int i = 0; i < n_; ++i) {
      const int v00 = j * nv + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + nv;
      const int v11 = v01 + 1;
      triangles_.push_back({v00, v10, v11});
      triangles_.push_back({v00, v11, v01});
    }
  }
  // Tag each boundary edge from its endpoint coordinates.
  auto tag = [&](int a, int b) {
    const auto& pa = vertices_[a];
    const auto& pb = vertices_[b];
    if (std::abs(pa.x()) < kBoundaryTol && std::abs(pb.x()) < kBoundaryTol) {
      boundary_.push_back({{a, b}, BoundarySide::left});
    } else if (std::abs(pa.x() - 1.0) < kBoundaryTol && std::abs(pb.x() - 1.0) < kBoundaryTol) {
      boundary_.push_back({{a, b}, BoundarySide::right});
    } else if (std::abs(pa.y()) < kBoundaryTol && std::abs(pb.y()) < kBoundaryTol) {
      boundary_.push_back({{a, b}, BoundarySide::bottom});
    } else if (std::abs(pa.y() - 1.0) < kBoundaryTol && std::abs(pb.y() - 1.0) < kBoundaryTol) {
      boundary_.push_back({{a, b}, BoundarySide::top});
    }
  };
  for (const auto& t : triangles_) {
    tag(t[0], t[1]);
    tag(t[1], t[2]);
    tag(t[2], t[0]);
  }
}

double UniformMesh::signed_area(int triangle) const {
  const auto& t = triangles_[triangle];
  const Eigen::Vector2d e1 = vertices_[t[1]] - vertices_[t[0]];
  const Eigen::Vector2d e2 = vertices_[t[2]] - vertices_[t[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

UniformMesh build_uniform_mesh(int divisions_per_side) { return UniformMesh(divisions_per_side); }

Eigen::Vector2d map_to_original(const Eigen::Vector2d& point, double height) {
  return {point.x(), height * point.y()};
}

MapJacobian jacobian(double height) {
  MapJacobian j;
  j.matrix << 1.0, 0.0, 0.0, height;
  j.determinant = height;
  return j;
}

double mapped_signed_area(const UniformMesh& mesh, int triangle, double height) {
  const auto& t = mesh.triangles()[triangle];
  const Eigen::Vector2d p0 = map_to_original(mesh.vertices()[t[0]], height);
  const Eigen::Vector2d e1 = map_to_original(mesh.vertices()[t[1]], height) - p0;
  const Eigen::Vector2d e2 = map_to_original(mesh.vertices()[t[2]], height) - p0;
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

void write_vtk_mesh(std::ostream& out, const UniformMesh& mesh, double height) {
  out << "# vtk DataFile Version 3.0\n"
      << "cavity mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  out.precision(17);
  for (const auto& v : mesh.vertices()) {
    const auto p = map_to_original(v, height);
    out << p.x() << ' ' << p.y() << " 0\n";
  }
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) {
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (int k = 0; k < mesh.num_triangles(); ++k) out << "5\n";
}

}  // namespace cavityrb

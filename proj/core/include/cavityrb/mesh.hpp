#pragma once

#include "cavityrb/types.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace cavityrb {

enum class BoundarySide { left, right, bottom, top };

struct BoundaryEdge {
  std::array<int, 2> vertices;
  BoundarySide side;
};

/// Uniform triangulation of the reference unit square with N_h cells per side.
///
/// Vertex (i, j) has index j * (N_h + 1) + i and sits at (i / N_h, j / N_h).
/// Every square cell is split along its lower-left to upper-right diagonal into
/// (v00, v10, v11) and (v00, v11, v01), both counter-clockwise.
class UniformMesh {
 public:
  explicit UniformMesh(int divisions_per_side);

  [[nodiscard]] int divisions() const { return n_; }
  [[nodiscard]] double cell_size() const { return 1.0 / n_; }
  [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] int num_triangles() const { return static_cast<int>(triangles_.size()); }

  [[nodiscard]] const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  [[nodiscard]] const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

  [[nodiscard]] double signed_area(int triangle) const;

 private:
  int n_;
  std::vector<Eigen::Vector2d> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_;
};

/// Throws InvalidArgument when divisions_per_side < 2.
UniformMesh build_uniform_mesh(int divisions_per_side);

/// Reference-to-original map (x, y) -> (x, height * y).
Eigen::Vector2d map_to_original(const Eigen::Vector2d& point, double height);

struct MapJacobian {
  Eigen::Matrix2d matrix;
  double determinant;
};

MapJacobian jacobian(double height);

/// Signed area of the triangle after mapping its vertices to the original domain.
double mapped_signed_area(const UniformMesh& mesh, int triangle, double height);

/// Legacy VTK (ASCII) unstructured grid of the mesh mapped to the original domain.
void write_vtk_mesh(std::ostream& out, const UniformMesh& mesh, double height);

}  // namespace cavityrb

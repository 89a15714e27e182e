#include "cavityrb/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace cavityrb;

TEST(UniformMesh, CountsFollowTheDivisions) {
  const auto m2 = build_uniform_mesh(2);
  EXPECT_EQ(m2.num_vertices(), 9);
  EXPECT_EQ(m2.num_triangles(), 8);
  const auto m50 = build_uniform_mesh(50);
  EXPECT_EQ(m50.num_vertices(), 2601);
  EXPECT_EQ(m50.num_triangles(), 5000);
}

TEST(UniformMesh, RejectsTooFewDivisions) {
  EXPECT_THROW(build_uniform_mesh(1), InvalidArgument);
  EXPECT_THROW(build_uniform_mesh(0), InvalidArgument);
}

TEST(UniformMesh, TrianglesTileTheUnitSquare) {
  const auto mesh = build_uniform_mesh(16);
  double area = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    EXPECT_GT(mesh.signed_area(t), 0.0);
    area += mesh.signed_area(t);
  }
  EXPECT_NEAR(area, 1.0, 1e-14);
}

TEST(UniformMesh, CellsSplitAlongTheRisingDiagonal) {
  const auto mesh = build_uniform_mesh(3);
  // Every triangle has one edge joining (i, j) and (i+1, j+1).
  for (const auto& tri : mesh.triangles()) {
    int diagonals = 0;
    for (int e = 0; e < 3; ++e) {
      const auto d = mesh.vertices()[tri[(e + 1) % 3]] - mesh.vertices()[tri[e]];
      if (std::abs(std::abs(d.x()) - 1.0 / 3) < 1e-14 && std::abs(d.x() - d.y()) < 1e-14) ++diagonals;
    }
    EXPECT_EQ(diagonals, 1);
  }
}

TEST(UniformMesh, BoundaryEdgesCarryTheirSide) {
  const int n = 4;
  const auto mesh = build_uniform_mesh(n);
  ASSERT_EQ(mesh.boundary_edges().size(), 4u * n);
  for (const auto& e : mesh.boundary_edges()) {
    const auto& a = mesh.vertices()[e.vertices[0]];
    const auto& b = mesh.vertices()[e.vertices[1]];
    switch (e.side) {
      case BoundarySide::left: EXPECT_TRUE(a.x() == 0.0 && b.x() == 0.0); break;
      case BoundarySide::right: EXPECT_TRUE(a.x() == 1.0 && b.x() == 1.0); break;
      case BoundarySide::bottom: EXPECT_TRUE(a.y() == 0.0 && b.y() == 0.0); break;
      case BoundarySide::top: EXPECT_TRUE(a.y() == 1.0 && b.y() == 1.0); break;
    }
  }
}

TEST(Map, ScalesTheVerticalCoordinate) {
  EXPECT_EQ(map_to_original({0.5, 0.25}, 1.0), Eigen::Vector2d(0.5, 0.25));
  EXPECT_EQ(map_to_original({1.0, 1.0}, 2.0), Eigen::Vector2d(1.0, 2.0));
  EXPECT_NEAR((map_to_original({0.3, 0.8}, 0.5) - Eigen::Vector2d(0.3, 0.4)).norm(), 0.0, 1e-15);
}

TEST(Map, JacobianIsDiagonal) {
  for (double g : {1.0, 2.0, 0.5}) {
    const auto j = jacobian(g);
    EXPECT_EQ(j.matrix(0, 0), 1.0);
    EXPECT_EQ(j.matrix(1, 1), g);
    EXPECT_EQ(j.matrix(0, 1), 0.0);
    EXPECT_EQ(j.matrix(1, 0), 0.0);
    EXPECT_EQ(j.determinant, g);
  }
}

TEST(Map, UnitHeightIsTheIdentityOnVertices) {
  const auto mesh = build_uniform_mesh(7);
  for (const auto& v : mesh.vertices()) EXPECT_EQ(map_to_original(v, 1.0), v);
}

class MappedArea : public ::testing::TestWithParam<double> {};

TEST_P(MappedArea, AreaScalesWithHeightAndMatchesTheDeterminant) {
  const double g = GetParam();
  const auto mesh = build_uniform_mesh(9);
  double area = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mapped_signed_area(mesh, t, g);
    EXPECT_NEAR(a / mesh.signed_area(t), jacobian(g).determinant, 1e-14);
    area += a;
  }
  EXPECT_NEAR(area, g, 1e-13);
}

INSTANTIATE_TEST_SUITE_P(Heights, MappedArea, ::testing::Values(0.5, 0.8, 1.0, 1.7, 2.0, 3.25));

TEST(VtkMesh, WritesALegacyHeader) {
  std::ostringstream out;
  write_vtk_mesh(out, build_uniform_mesh(2), 2.0);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("# vtk DataFile Version", 0), 0u);
  EXPECT_NE(s.find("POINTS 9"), std::string::npos);
  EXPECT_NE(s.find("CELLS 8"), std::string::npos);
}

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mras {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Triangle = std::array<std::size_t, 3>;

struct BoundaryEdge {
  std::array<std::size_t, 2> vertices;  // oriented along the owning triangle (CCW)
  std::size_t triangle;
};

/// Conforming 2D triangulation. Immutable after construction; the
/// constructor checks orientation, positive areas and edge conformity and
/// throws InputError otherwise.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const BoundaryEdge> boundary_edges() const { return boundary_edges_; }
  std::span<const double> element_areas() const { return areas_; }

  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const Triangle& triangle(std::size_t e) const { return triangles_[e]; }
  double area(std::size_t e) const { return areas_[e]; }
  bool is_boundary_vertex(std::size_t i) const { return boundary_flags_[i] != 0; }
  const std::vector<char>& boundary_vertex_flags() const { return boundary_flags_; }

  Point centroid(std::size_t e) const;
  double total_area() const;
  /// Longest edge over all triangles.
  double max_diameter() const;
  std::size_t num_interior_edges() const { return interior_edge_count_; }

  bool operator==(const Mesh& other) const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<double> areas_;
  std::vector<char> boundary_flags_;
  std::size_t interior_edge_count_ = 0;
};

/// Structured mesh of [xmin,xmax]x[ymin,ymax]; each of the nx*ny cells is
/// split along its (i,j)-(i+1,j+1) diagonal, nx = ceil((xmax-xmin)*sqrt(2)/h_max).
Mesh rect_mesh(double xmin, double xmax, double ymin, double ymax, double h_max);

/// Polar ring triangulation of the disk of the given radius centred at the
/// origin. Boundary vertices lie on the circle.
Mesh disk_mesh(double radius, double h_max);

/// Signed area of the triangle (a, b, c); positive when counterclockwise.
double signed_area(const Point& a, const Point& b, const Point& c);

}  // namespace mras

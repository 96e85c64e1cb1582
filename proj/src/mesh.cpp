#include "mras/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include "mras/error.hpp"

namespace mras {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (triangles_.empty()) throw InputError("mesh: no triangles");
  for (const auto& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InputError("mesh: non-finite vertex coordinate");
  }

  areas_.reserve(triangles_.size());
  // edge (lo, hi) -> (owner count, last owner, oriented vertices in last owner)
  struct EdgeUse {
    int count = 0;
    std::size_t triangle = 0;
    std::array<std::size_t, 2> oriented{};
  };
  std::map<std::pair<std::size_t, std::size_t>, EdgeUse> edges;

  for (std::size_t e = 0; e < triangles_.size(); ++e) {
    const auto& t = triangles_[e];
    for (auto v : t) {
      if (v >= vertices_.size())
        throw InputError("mesh: triangle " + std::to_string(e) + " references missing vertex");
    }
    const double a = signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    if (!(a > 0.0))
      throw InputError("mesh: triangle " + std::to_string(e) +
                       " is degenerate or clockwise");
    areas_.push_back(a);
    for (int k = 0; k < 3; ++k) {
      const std::size_t p = t[k];
      const std::size_t q = t[(k + 1) % 3];
      auto& use = edges[{std::min(p, q), std::max(p, q)}];
      ++use.count;
      use.triangle = e;
      use.oriented = {p, q};
    }
  }

  boundary_flags_.assign(vertices_.size(), 0);
  for (const auto& [key, use] : edges) {
    if (use.count == 1) {
      boundary_edges_.push_back({use.oriented, use.triangle});
      boundary_flags_[key.first] = 1;
      boundary_flags_[key.second] = 1;
    } else if (use.count == 2) {
      ++interior_edge_count_;
    } else {
      throw InputError("mesh: edge shared by more than two triangles");
    }
  }
}

Point Mesh::centroid(std::size_t e) const {
  const auto& t = triangles_[e];
  const auto& a = vertices_[t[0]];
  const auto& b = vertices_[t[1]];
  const auto& c = vertices_[t[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (double a : areas_) sum += a;
  return sum;
}

double Mesh::max_diameter() const {
  double h = 0.0;
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const auto& p = vertices_[t[k]];
      const auto& q = vertices_[t[(k + 1) % 3]];
      h = std::max(h, std::hypot(p.x - q.x, p.y - q.y));
    }
  }
  return h;
}

bool Mesh::operator==(const Mesh& other) const {
  if (triangles_ != other.triangles_ || vertices_.size() != other.vertices_.size()) return false;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (vertices_[i].x != other.vertices_[i].x || vertices_[i].y != other.vertices_[i].y)
      return false;
  }
  return true;
}

Mesh rect_mesh(double xmin, double xmax, double ymin, double ymax, double h_max) {
  if (!std::isfinite(xmin) || !std::isfinite(xmax) || !std::isfinite(ymin) ||
      !std::isfinite(ymax) || !std::isfinite(h_max))
    throw InputError("rect_mesh: non-finite input");
  if (!(xmax > xmin) || !(ymax > ymin)) throw InputError("rect_mesh: degenerate bounds");
  if (!(h_max > 0.0)) throw InputError("rect_mesh: h_max must be positive");

  const auto cells = [h_max](double length) {
    return static_cast<std::size_t>(
        std::max(1.0, std::ceil(length * std::numbers::sqrt2 / h_max)));
  };
  const std::size_t nx = cells(xmax - xmin);
  const std::size_t ny = cells(ymax - ymin);

  std::vector<Point> vertices;
  vertices.reserve((nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j) {
    // Exact endpoints so boundary coordinates are not polluted by rounding.
    const double y = j == ny ? ymax : ymin + (ymax - ymin) * static_cast<double>(j) / ny;
    for (std::size_t i = 0; i <= nx; ++i) {
      const double x = i == nx ? xmax : xmin + (xmax - xmin) * static_cast<double>(i) / nx;
      vertices.push_back({x, y});
    }
  }
  const auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };

  std::vector<Triangle> triangles;
  triangles.reserve(2 * nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      triangles.push_back({v00, v10, v11});
      triangles.push_back({v00, v11, v01});
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh disk_mesh(double radius, double h_max) {
  if (!std::isfinite(radius) || !std::isfinite(h_max) || !(radius > 0.0) || !(h_max > 0.0))
    throw InputError("disk_mesh: radius and h_max must be positive and finite");
  if (h_max >= radius) throw InputError("disk_mesh: h_max too coarse for the radius");

  // Ring spacing and chords of h/2 keep every connecting edge below h_max.
  const double spacing = 0.5 * h_max;
  const auto n_rings = static_cast<std::size_t>(std::ceil(radius / spacing));

  std::vector<Point> vertices{{0.0, 0.0}};
  std::vector<Triangle> triangles;
  std::vector<std::size_t> inner{0};  // ring 0 is the centre vertex
  std::size_t prev_count = 6;

  for (std::size_t k = 1; k <= n_rings; ++k) {
    const double r = k == n_rings ? radius : radius * static_cast<double>(k) / n_rings;
    const double half_angle = std::asin(std::min(1.0, spacing / (2.0 * r)));
    auto count = static_cast<std::size_t>(std::ceil(std::numbers::pi / half_angle));
    count = std::max(count, prev_count);
    prev_count = count;

    std::vector<std::size_t> outer(count);
    for (std::size_t j = 0; j < count; ++j) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / count;
      outer[j] = vertices.size();
      vertices.push_back({r * std::cos(theta), r * std::sin(theta)});
    }

    if (inner.size() == 1) {
      for (std::size_t j = 0; j < count; ++j)
        triangles.push_back({inner[0], outer[j], outer[(j + 1) % count]});
    } else {
      // Merge the two rings by angle; comparisons are done on integer
      // fractions so the stitching is exact.
      const std::size_t m = inner.size();
      const std::size_t n = count;
      std::size_t i = 0, j = 0;
      while (i < m || j < n) {
        const bool advance_inner = j == n || (i < m && (i + 1) * n < (j + 1) * m);
        if (advance_inner) {
          triangles.push_back({inner[i], outer[j % n], inner[(i + 1) % m]});
          ++i;
        } else {
          triangles.push_back({inner[i % m], outer[j], outer[(j + 1) % n]});
          ++j;
        }
      }
    }
    inner = std::move(outer);
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

}  // namespace mras

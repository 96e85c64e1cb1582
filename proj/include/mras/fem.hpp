#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mras/mesh.hpp"
#include "mras/sparse.hpp"

namespace mras {

/// P1 field: one value per mesh vertex. Holds a non-owning mesh pointer; the
/// mesh must outlive the field.
class NodalField {
 public:
  NodalField() = default;
  explicit NodalField(const Mesh& mesh, double value = 0.0);
  NodalField(const Mesh& mesh, std::vector<double> values);

  const Mesh& mesh() const { return *mesh_; }
  bool has_mesh() const { return mesh_ != nullptr; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  bool all_finite() const;

 private:
  const Mesh* mesh_ = nullptr;
  std::vector<double> values_;
};

/// P0 field: one value per triangle.
class CellField {
 public:
  CellField() = default;
  explicit CellField(const Mesh& mesh, double value = 0.0);
  CellField(const Mesh& mesh, std::vector<double> values);

  const Mesh& mesh() const { return *mesh_; }
  bool has_mesh() const { return mesh_ != nullptr; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t e) const { return values_[e]; }
  double& operator[](std::size_t e) { return values_[e]; }
  bool all_finite() const;

 private:
  const Mesh* mesh_ = nullptr;
  std::vector<double> values_;
};

/// Throws InputError unless both fields live on the same mesh object.
void require_same_mesh(const Mesh& a, const Mesh& b, const char* where);

NodalField operator+(const NodalField& a, const NodalField& b);
NodalField operator-(const NodalField& a, const NodalField& b);
NodalField operator*(double s, const NodalField& a);
CellField operator+(const CellField& a, const CellField& b);
CellField operator-(const CellField& a, const CellField& b);
CellField operator*(double s, const CellField& a);

// ---------------------------------------------------------------------------
// Element geometry and quadrature

struct ElementGeometry {
  double area;
  std::array<std::array<double, 2>, 3> grad;  // gradients of the local P1 basis
};

ElementGeometry element_geometry(const Mesh& mesh, std::size_t e);

/// 7-point symmetric rule, exact for polynomials of degree 5. Points are
/// barycentric, weights sum to one (multiply by the element area).
struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;
};
const std::array<QuadraturePoint, 7>& triangle_quadrature();

inline double interpolate(std::span<const double> nodal, const Triangle& t,
                          const std::array<double, 3>& bary) {
  return bary[0] * nodal[t[0]] + bary[1] * nodal[t[1]] + bary[2] * nodal[t[2]];
}

/// Per-element integral of a pointwise integrand f(e, bary).
template <class F>
std::vector<double> integrate_per_element(const Mesh& mesh, F&& f) {
  const auto& rule = triangle_quadrature();
  std::vector<double> out(mesh.num_triangles(), 0.0);
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    double s = 0.0;
    for (const auto& qp : rule) s += qp.weight * f(e, qp.bary);
    out[e] = s * mesh.area(e);
  }
  return out;
}

/// Load vector b_i = integral of f(e, bary) * phi_i.
template <class F>
std::vector<double> integrate_against_basis(const Mesh& mesh, F&& f) {
  const auto& rule = triangle_quadrature();
  std::vector<double> out(mesh.num_vertices(), 0.0);
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangle(e);
    std::array<double, 3> local{};
    for (const auto& qp : rule) {
      const double v = qp.weight * f(e, qp.bary);
      for (int k = 0; k < 3; ++k) local[k] += v * qp.bary[k];
    }
    for (int k = 0; k < 3; ++k) out[t[k]] += local[k] * mesh.area(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

CsrMatrix assemble_mass(const Mesh& mesh);
CsrMatrix assemble_stiffness(const Mesh& mesh);
CsrMatrix assemble_stiffness(const Mesh& mesh, const CellField& coeff);
/// Integral of w^power phi_i phi_j with w interpolated as P1; power in {1,2,3}.
CsrMatrix assemble_weighted_mass(const Mesh& mesh, const NodalField& w, int power);
/// Boundary mass: integral over the boundary of phi_i phi_j.
CsrMatrix assemble_boundary_mass(const Mesh& mesh);

/// Rectangular (vertices x triangles) operator G with
/// (G a)_i = sum_e a_e * area_e * (grad z . grad phi_i)|_e.
CsrMatrix grad_coupling(const Mesh& mesh, const NodalField& z);

/// value_e = (grad z . grad w)|_e
CellField elementwise_gradient_dot(const NodalField& z, const NodalField& w);

/// value_e = sum over boundary edges of e of (grad z|_e . n) * |edge|.
CellField boundary_flux_form(const NodalField& z);

/// M f
std::vector<double> load_vector(const NodalField& f);

double l2_norm(const NodalField& field);
double l2_norm(const CellField& field);
/// L2 norm of a raw nodal vector on the given mesh.
double l2_norm_nodal(const Mesh& mesh, std::span<const double> values);

// ---------------------------------------------------------------------------
// Point location and inter-mesh transfer

struct Location {
  std::size_t triangle;
  std::array<double, 3> bary;
};

/// Bucket grid over a mesh for point-in-triangle queries.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);
  /// Containing triangle, or the nearest one when the point lies within
  /// `tol` of the mesh. nullopt otherwise.
  std::optional<Location> locate(const Point& p, double tol = 1e-10) const;

 private:
  std::size_t bucket_index(std::size_t i, std::size_t j) const { return j * nx_ + i; }
  const Mesh* mesh_;
  double xmin_, ymin_, cell_w_, cell_h_;
  std::size_t nx_, ny_;
  std::vector<std::vector<std::size_t>> buckets_;
};

/// P1 interpolation of a fine-mesh field at the vertices of `coarse`.
/// Throws InputError when a coarse vertex lies farther than tol from the fine mesh.
NodalField transfer(const NodalField& fine, const Mesh& coarse, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Essential boundary conditions

/// Eliminates constrained rows/columns and moves known values to the rhs.
class DirichletReduction {
 public:
  explicit DirichletReduction(std::vector<char> constrained);

  struct System {
    CsrMatrix matrix;
    std::vector<double> rhs;
  };

  std::size_t full_size() const { return constrained_.size(); }
  std::size_t free_size() const { return free_dofs_.size(); }

  /// `values` is full length; only constrained entries are read.
  System reduce(const CsrMatrix& a, std::span<const double> rhs,
                std::span<const double> values) const;
  std::vector<double> expand(std::span<const double> reduced,
                             std::span<const double> values) const;
  std::vector<double> restrict_to_free(std::span<const double> full) const;

 private:
  std::vector<char> constrained_;
  std::vector<std::size_t> free_dofs_;
  std::vector<std::size_t> free_index_;  // full -> reduced, npos for constrained
};

/// Solves A x = rhs with x fixed to `values` on mesh boundary vertices, using
/// Jacobi-CG on the reduced system. Throws SolverError on non-convergence.
std::vector<double> solve_with_dirichlet(const Mesh& mesh, const CsrMatrix& a,
                                         std::span<const double> rhs,
                                         std::span<const double> values,
                                         std::span<const double> initial_guess,
                                         const SolveOptions& options);

}  // namespace mras

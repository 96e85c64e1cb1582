#include "mras/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "mras/error.hpp"

namespace mras {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw InputError(std::string(what) + ": expected " + std::to_string(want) + " values, got " +
                     std::to_string(got));
}

std::array<QuadraturePoint, 7> make_rule() {
  const double s = std::sqrt(15.0);
  const double a1 = (9.0 - 2.0 * s) / 21.0, b1 = (6.0 + s) / 21.0;
  const double a2 = (9.0 + 2.0 * s) / 21.0, b2 = (6.0 - s) / 21.0;
  const double w1 = (155.0 + s) / 1200.0, w2 = (155.0 - s) / 1200.0;
  return {{
      {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
      {{a1, b1, b1}, w1},
      {{b1, a1, b1}, w1},
      {{b1, b1, a1}, w1},
      {{a2, b2, b2}, w2},
      {{b2, a2, b2}, w2},
      {{b2, b2, a2}, w2},
  }};
}

// Distance from p to segment ab.
double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::hypot(p.x - (a.x + s * dx), p.y - (a.y + s * dy));
}

}  // namespace

// ---------------------------------------------------------------------------
// Fields

NodalField::NodalField(const Mesh& mesh, double value)
    : mesh_(&mesh), values_(mesh.num_vertices(), value) {}

NodalField::NodalField(const Mesh& mesh, std::vector<double> values)
    : mesh_(&mesh), values_(std::move(values)) {
  require_size(values_.size(), mesh.num_vertices(), "NodalField");
}

bool NodalField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

CellField::CellField(const Mesh& mesh, double value)
    : mesh_(&mesh), values_(mesh.num_triangles(), value) {}

CellField::CellField(const Mesh& mesh, std::vector<double> values)
    : mesh_(&mesh), values_(std::move(values)) {
  require_size(values_.size(), mesh.num_triangles(), "CellField");
}

bool CellField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_mesh(const Mesh& a, const Mesh& b, const char* where) {
  if (&a != &b) throw InputError(std::string(where) + ": fields live on different meshes");
}

namespace {
template <class Field, class Op>
Field combine(const Field& a, const Field& b, Op op) {
  require_same_mesh(a.mesh(), b.mesh(), "field arithmetic");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(a[i], b[i]);
  return Field(a.mesh(), std::move(v));
}
template <class Field>
Field scale(double s, const Field& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= s;
  return Field(a.mesh(), std::move(v));
}
}  // namespace

NodalField operator+(const NodalField& a, const NodalField& b) {
  return combine(a, b, std::plus<>());
}
NodalField operator-(const NodalField& a, const NodalField& b) {
  return combine(a, b, std::minus<>());
}
NodalField operator*(double s, const NodalField& a) { return scale(s, a); }
CellField operator+(const CellField& a, const CellField& b) { return combine(a, b, std::plus<>()); }
CellField operator-(const CellField& a, const CellField& b) {
  return combine(a, b, std::minus<>());
}
CellField operator*(double s, const CellField& a) { return scale(s, a); }

// ---------------------------------------------------------------------------
// Geometry

ElementGeometry element_geometry(const Mesh& mesh, std::size_t e) {
  const auto& t = mesh.triangle(e);
  const Point* p[3] = {&mesh.vertex(t[0]), &mesh.vertex(t[1]), &mesh.vertex(t[2])};
  ElementGeometry g{};
  g.area = mesh.area(e);
  const double two_a = 2.0 * g.area;
  for (int k = 0; k < 3; ++k) {
    const Point& a = *p[(k + 1) % 3];
    const Point& b = *p[(k + 2) % 3];
    g.grad[k] = {(a.y - b.y) / two_a, (b.x - a.x) / two_a};
  }
  return g;
}

const std::array<QuadraturePoint, 7>& triangle_quadrature() {
  static const auto rule = make_rule();
  return rule;
}

// ---------------------------------------------------------------------------
// Assembly

CsrMatrix assemble_mass(const Mesh& mesh) {
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& tri = mesh.triangle(e);
    const double a = mesh.area(e) / 12.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.push_back({tri[i], tri[j], i == j ? 2.0 * a : a});
  }
  return csr_from_triplets(mesh.num_vertices(), mesh.num_vertices(), t);
}

CsrMatrix assemble_stiffness(const Mesh& mesh) {
  return assemble_stiffness(mesh, CellField(mesh, 1.0));
}

CsrMatrix assemble_stiffness(const Mesh& mesh, const CellField& coeff) {
  require_same_mesh(mesh, coeff.mesh(), "assemble_stiffness");
#ifndef NDEBUG
  for (double c : coeff.values()) {
    if (c < 0.0) {
      // Allowed; callers decide what a negative coefficient means.
      break;
    }
  }
#endif
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& tri = mesh.triangle(e);
    const auto g = element_geometry(mesh, e);
    const double s = coeff[e] * g.area;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        t.push_back({tri[i], tri[j],
                     s * (g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1])});
  }
  return csr_from_triplets(mesh.num_vertices(), mesh.num_vertices(), t);
}

CsrMatrix assemble_weighted_mass(const Mesh& mesh, const NodalField& w, int power) {
  require_same_mesh(mesh, w.mesh(), "assemble_weighted_mass");
  if (power < 1 || power > 3) throw InputError("assemble_weighted_mass: power must be 1, 2 or 3");
  const auto& rule = triangle_quadrature();
  const auto wv = w.values();
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& tri = mesh.triangle(e);
    std::array<std::array<double, 3>, 3> local{};
    for (const auto& qp : rule) {
      const double wq = std::pow(interpolate(wv, tri, qp.bary), power) * qp.weight;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local[i][j] += wq * qp.bary[i] * qp.bary[j];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.push_back({tri[i], tri[j], local[i][j] * mesh.area(e)});
  }
  return csr_from_triplets(mesh.num_vertices(), mesh.num_vertices(), t);
}

CsrMatrix assemble_boundary_mass(const Mesh& mesh) {
  std::vector<Triplet> t;
  for (const auto& edge : mesh.boundary_edges()) {
    const auto& a = mesh.vertex(edge.vertices[0]);
    const auto& b = mesh.vertex(edge.vertices[1]);
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        t.push_back({edge.vertices[i], edge.vertices[j], len * (i == j ? 2.0 : 1.0) / 6.0});
  }
  return csr_from_triplets(mesh.num_vertices(), mesh.num_vertices(), t);
}

namespace {
std::array<double, 2> element_gradient(const Mesh& mesh, const ElementGeometry& g,
                                       std::size_t e, std::span<const double> z) {
  const auto& tri = mesh.triangle(e);
  std::array<double, 2> grad{0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    grad[0] += z[tri[k]] * g.grad[k][0];
    grad[1] += z[tri[k]] * g.grad[k][1];
  }
  return grad;
}
}  // namespace

CsrMatrix grad_coupling(const Mesh& mesh, const NodalField& z) {
  require_same_mesh(mesh, z.mesh(), "grad_coupling");
  std::vector<Triplet> t;
  t.reserve(3 * mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto g = element_geometry(mesh, e);
    const auto gz = element_gradient(mesh, g, e, z.values());
    const auto& tri = mesh.triangle(e);
    for (int i = 0; i < 3; ++i)
      t.push_back({tri[i], e, g.area * (gz[0] * g.grad[i][0] + gz[1] * g.grad[i][1])});
  }
  return csr_from_triplets(mesh.num_vertices(), mesh.num_triangles(), t);
}

CellField elementwise_gradient_dot(const NodalField& z, const NodalField& w) {
  require_same_mesh(z.mesh(), w.mesh(), "elementwise_gradient_dot");
  const Mesh& mesh = z.mesh();
  CellField out(mesh);
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto g = element_geometry(mesh, e);
    const auto gz = element_gradient(mesh, g, e, z.values());
    const auto gw = element_gradient(mesh, g, e, w.values());
    out[e] = gz[0] * gw[0] + gz[1] * gw[1];
  }
  return out;
}

CellField boundary_flux_form(const NodalField& z) {
  const Mesh& mesh = z.mesh();
  CellField out(mesh);
  for (const auto& edge : mesh.boundary_edges()) {
    const auto& a = mesh.vertex(edge.vertices[0]);
    const auto& b = mesh.vertex(edge.vertices[1]);
    // CCW owner: the outward normal times |edge| is (dy, -dx).
    const double nx = b.y - a.y, ny = -(b.x - a.x);
    const auto g = element_geometry(mesh, edge.triangle);
    const auto gz = element_gradient(mesh, g, edge.triangle, z.values());
    out[edge.triangle] += gz[0] * nx + gz[1] * ny;
  }
  return out;
}

std::vector<double> load_vector(const NodalField& f) {
  return assemble_mass(f.mesh()).multiply(f.values());
}

double l2_norm_nodal(const Mesh& mesh, std::span<const double> v) {
  require_size(v.size(), mesh.num_vertices(), "l2_norm");
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangle(e);
    const double a = v[t[0]], b = v[t[1]], c = v[t[2]];
    // element mass matrix (area/12)[[2,1,1],[1,2,1],[1,1,2]]
    s += mesh.area(e) / 12.0 *
         (2.0 * (a * a + b * b + c * c) + 2.0 * (a * b + b * c + a * c));
  }
  return std::sqrt(std::max(s, 0.0));
}

double l2_norm(const NodalField& field) { return l2_norm_nodal(field.mesh(), field.values()); }

double l2_norm(const CellField& field) {
  const Mesh& mesh = field.mesh();
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) s += mesh.area(e) * field[e] * field[e];
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Point location

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  double xmax = -std::numeric_limits<double>::infinity();
  double ymax = xmax;
  xmin_ = ymin_ = std::numeric_limits<double>::infinity();
  for (const auto& p : mesh.vertices()) {
    xmin_ = std::min(xmin_, p.x);
    ymin_ = std::min(ymin_, p.y);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  }
  const auto n = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::sqrt(static_cast<double>(mesh.num_triangles())))));
  nx_ = ny_ = n;
  cell_w_ = std::max(xmax - xmin_, 1e-300) / static_cast<double>(nx_);
  cell_h_ = std::max(ymax - ymin_, 1e-300) / static_cast<double>(ny_);
  buckets_.resize(nx_ * ny_);

  const auto clamp_i = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
  };
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangle(e);
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    for (auto v : t) {
      x0 = std::min(x0, mesh.vertex(v).x);
      x1 = std::max(x1, mesh.vertex(v).x);
      y0 = std::min(y0, mesh.vertex(v).y);
      y1 = std::max(y1, mesh.vertex(v).y);
    }
    const auto i0 = clamp_i(std::floor((x0 - xmin_) / cell_w_) - 1, nx_);
    const auto i1 = clamp_i(std::floor((x1 - xmin_) / cell_w_) + 1, nx_);
    const auto j0 = clamp_i(std::floor((y0 - ymin_) / cell_h_) - 1, ny_);
    const auto j1 = clamp_i(std::floor((y1 - ymin_) / cell_h_) + 1, ny_);
    for (auto j = j0; j <= j1; ++j)
      for (auto i = i0; i <= i1; ++i) buckets_[bucket_index(i, j)].push_back(e);
  }
}

std::optional<Location> PointLocator::locate(const Point& p, double tol) const {
  const double fi = std::floor((p.x - xmin_) / cell_w_);
  const double fj = std::floor((p.y - ymin_) / cell_h_);
  if (fi < -1.0 || fj < -1.0 || fi > static_cast<double>(nx_) || fj > static_cast<double>(ny_))
    return std::nullopt;
  const auto i = static_cast<std::size_t>(std::clamp(fi, 0.0, static_cast<double>(nx_ - 1)));
  const auto j = static_cast<std::size_t>(std::clamp(fj, 0.0, static_cast<double>(ny_ - 1)));

  const Mesh& mesh = *mesh_;
  std::optional<Location> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (auto e : buckets_[bucket_index(i, j)]) {
    const auto& t = mesh.triangle(e);
    const Point& a = mesh.vertex(t[0]);
    const Point& b = mesh.vertex(t[1]);
    const Point& c = mesh.vertex(t[2]);
    const double area = mesh.area(e);
    const std::array<double, 3> bary{signed_area(p, b, c) / area, signed_area(a, p, c) / area,
                                      signed_area(a, b, p) / area};
    const double m = std::min({bary[0], bary[1], bary[2]});
    if (m > best_min) {
      best_min = m;
      best = Location{e, bary};
    }
  }
  if (!best) return std::nullopt;
  if (best_min >= 0.0) return best;

  // Outside every candidate: accept only if within tol of the nearest triangle.
  double dist = std::numeric_limits<double>::infinity();
  for (auto e : buckets_[bucket_index(i, j)]) {
    const auto& t = mesh.triangle(e);
    for (int k = 0; k < 3; ++k)
      dist = std::min(dist, segment_distance(p, mesh.vertex(t[k]), mesh.vertex(t[(k + 1) % 3])));
  }
  if (dist <= tol) return best;
  return std::nullopt;
}

NodalField transfer(const NodalField& fine, const Mesh& coarse, double tol) {
  const Mesh& fmesh = fine.mesh();
  const PointLocator locator(fmesh);
  std::vector<double> out(coarse.num_vertices());
  for (std::size_t v = 0; v < coarse.num_vertices(); ++v) {
    const auto loc = locator.locate(coarse.vertex(v), tol);
    if (!loc)
      throw InputError("transfer: coarse vertex " + std::to_string(v) +
                       " lies outside the fine mesh");
    out[v] = interpolate(fine.values(), fmesh.triangle(loc->triangle), loc->bary);
  }
  return NodalField(coarse, std::move(out));
}

// ---------------------------------------------------------------------------
// Dirichlet elimination

DirichletReduction::DirichletReduction(std::vector<char> constrained)
    : constrained_(std::move(constrained)), free_index_(constrained_.size(), npos) {
  for (std::size_t i = 0; i < constrained_.size(); ++i) {
    if (!constrained_[i]) {
      free_index_[i] = free_dofs_.size();
      free_dofs_.push_back(i);
    }
  }
}

DirichletReduction::System DirichletReduction::reduce(const CsrMatrix& a,
                                                      std::span<const double> rhs,
                                                      std::span<const double> values) const {
  const std::size_t n = constrained_.size();
  if (a.rows() != n || a.cols() != n || rhs.size() != n || values.size() != n)
    throw InputError("apply_dirichlet: size mismatch between matrix, rhs and boundary flags");
  const auto off = a.row_offsets();
  const auto col = a.column_indices();
  const auto val = a.values();

  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> columns;
  std::vector<double> entries;
  std::vector<double> reduced_rhs(free_dofs_.size());
  offsets.reserve(free_dofs_.size() + 1);
  for (std::size_t r = 0; r < free_dofs_.size(); ++r) {
    const std::size_t i = free_dofs_[r];
    double b = rhs[i];
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const std::size_t j = col[k];
      if (constrained_[j]) {
        b -= val[k] * values[j];
      } else {
        columns.push_back(free_index_[j]);
        entries.push_back(val[k]);
      }
    }
    reduced_rhs[r] = b;
    offsets.push_back(columns.size());
  }
  return {CsrMatrix(free_dofs_.size(), free_dofs_.size(), std::move(offsets), std::move(columns),
                    std::move(entries)),
          std::move(reduced_rhs)};
}

std::vector<double> DirichletReduction::expand(std::span<const double> reduced,
                                               std::span<const double> values) const {
  if (reduced.size() != free_dofs_.size() || values.size() != constrained_.size())
    throw InputError("apply_dirichlet: size mismatch on expansion");
  std::vector<double> full(constrained_.size());
  for (std::size_t i = 0; i < full.size(); ++i)
    full[i] = constrained_[i] ? values[i] : reduced[free_index_[i]];
  return full;
}

std::vector<double> DirichletReduction::restrict_to_free(std::span<const double> full) const {
  if (full.size() != constrained_.size()) throw InputError("apply_dirichlet: size mismatch");
  std::vector<double> out(free_dofs_.size());
  for (std::size_t r = 0; r < free_dofs_.size(); ++r) out[r] = full[free_dofs_[r]];
  return out;
}

std::vector<double> solve_with_dirichlet(const Mesh& mesh, const CsrMatrix& a,
                                         std::span<const double> rhs,
                                         std::span<const double> values,
                                         std::span<const double> initial_guess,
                                         const SolveOptions& options) {
  const DirichletReduction reduction(mesh.boundary_vertex_flags());
  auto system = reduction.reduce(a, rhs, values);
  const auto x0 = reduction.restrict_to_free(initial_guess);
  auto result = cg_solve(system.matrix, system.rhs, x0, options);
  if (!result.report.converged)
    throw SolverError("CG did not converge: relative residual " +
                      std::to_string(result.report.final_residual_norm) + " after " +
                      std::to_string(result.report.iterations) + " iterations");
  return reduction.expand(result.x, values);
}

}  // namespace mras

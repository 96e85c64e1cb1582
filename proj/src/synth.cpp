#include "mras/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "mras/error.hpp"
#include "mras/random.hpp"

namespace mras {

namespace {

// Stream tags keep the source, initial-state and noise draws independent.
constexpr std::uint64_t kSourceStream = 0x5352430000000000ULL;
constexpr std::uint64_t kInitialStream = 0x494e490000000000ULL;
constexpr std::uint64_t kNoiseStream = 0x4e4f490000000000ULL;

double grid_normal(std::uint64_t seed, std::uint64_t stream, std::size_t i, std::size_t j) {
  return rng::normal(seed, stream, j * kSourceGridSize + i);
}

double bilinear_grid(std::uint64_t seed, std::uint64_t stream, const Point& p, const Domain& box) {
  const double last = static_cast<double>(kSourceGridSize - 1);
  const auto coord = [last](double v, double lo, double hi, std::size_t& i0, double& frac) {
    const double s = std::clamp((v - lo) / (hi - lo), 0.0, 1.0) * last;
    const double f = std::min(std::floor(s), last - 1.0);
    i0 = static_cast<std::size_t>(f);
    frac = s - f;
  };
  std::size_t i, j;
  double fx, fy;
  coord(p.x, box.xmin, box.xmax, i, fx);
  coord(p.y, box.ymin, box.ymax, j, fy);
  const double v00 = grid_normal(seed, stream, i, j);
  const double v10 = grid_normal(seed, stream, i + 1, j);
  const double v01 = grid_normal(seed, stream, i, j + 1);
  const double v11 = grid_normal(seed, stream, i + 1, j + 1);
  return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11;
}

bool inside(double v, double lo, double hi) { return v >= lo && v <= hi; }

void zero_boundary(NodalField& f) {
  const auto& flags = f.mesh().boundary_vertex_flags();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (flags[i]) f[i] = 0.0;
}

bool closed_form(ProblemKind k) {
  return k == ProblemKind::nonlinear_potential || k == ProblemKind::allen_cahn;
}

}  // namespace

Mesh Domain::mesh(double h_max) const {
  return shape == Shape::disk ? disk_mesh(radius, h_max) : rect_mesh(xmin, xmax, ymin, ymax, h_max);
}

Domain Domain::for_kind(ProblemKind kind) {
  Domain d;
  switch (kind) {
    case ProblemKind::darcy: break;
    case ProblemKind::fisher_kpp:
      d.xmin = d.ymin = -1.25;
      d.xmax = d.ymax = 1.25;
      break;
    case ProblemKind::nonlinear_potential:
      d.shape = Shape::disk;
      d.radius = std::numbers::pi;
      d.xmin = d.ymin = -std::numbers::pi;
      d.xmax = d.ymax = std::numbers::pi;
      break;
    case ProblemKind::allen_cahn:
      d.xmin = -2.0;
      d.xmax = 2.0;
      d.ymin = -1.0;
      d.ymax = 1.0;
      break;
  }
  return d;
}

TruthModel make_truth(ProblemKind kind, std::uint64_t seed) {
  TruthModel m;
  m.kind = kind;
  switch (kind) {
    case ProblemKind::darcy: {
      m.parameter = [](const Point& p) {
        const bool blob = (inside(p.x, 0.15, 0.5) && inside(p.y, 0.2, 0.75)) ||
                          (inside(p.x, 0.45, 0.85) && inside(p.y, 0.5, 0.9));
        return blob ? 1.0 : 0.25;
      };
      m.initial_guess = [](const Point& p) {
        const double dx = p.x - 0.5, dy = p.y - 0.5;
        return dx * dx + dy * dy < 0.42 * 0.42 ? 1.0 : 0.0;
      };
      const Domain box = Domain::for_kind(kind);
      m.initial_state = [seed, box](const Point& p) {
        return bilinear_grid(seed, kInitialStream, p, box);
      };
      m.random_source = true;
      break;
    }
    case ProblemKind::fisher_kpp: {
      m.parameter = [](const Point& p) {
        const double r2 = p.x * p.x + p.y * p.y;
        return (r2 > 0.25 && r2 < 0.81) ? 1.0 : 0.25;
      };
      m.initial_guess = [](const Point& p) {
        return (std::abs(p.x) <= 1.15 && std::abs(p.y) <= 1.15) ? 1.0 : 0.0;
      };
      m.initial_state = [](const Point& p) {
        return 3.0 * std::exp(-(p.x * p.x + p.y * p.y) / 0.4);
      };
      m.source = [](const Point& p, double t) {
        return 3.0 * std::exp(-(p.x * p.x + p.y * p.y) / 0.4) * std::cos(2.0 * t);
      };
      break;
    }
    case ProblemKind::nonlinear_potential: {
      const auto c = [](const Point& p) { return std::numbers::pi - std::hypot(p.x, p.y); };
      // Smooth positive bump with values in (1, 1.5].
      const auto u0 = [](const Point& p) {
        const double dx = p.x - 0.8, dy = p.y - 0.5;
        return 1.0 + 0.5 * std::exp(-(dx * dx + dy * dy) / 2.0);
      };
      const auto lap_u0 = [](const Point& p) {
        const double dx = p.x - 0.8, dy = p.y - 0.5;
        const double r2 = dx * dx + dy * dy;
        return 0.5 * std::exp(-r2 / 2.0) * (r2 - 2.0);
      };
      m.parameter = c;
      m.initial_guess = [](const Point&) { return 0.0; };
      m.state = [u0](const Point& p, double t) { return u0(p) * (6.0 - t) / 6.0 + t / 6.0; };
      m.initial_state = [s = m.state](const Point& p) { return s(p, 0.0); };
      m.source = [c, u0, lap_u0](const Point& p, double t) {
        const double u = u0(p) * (6.0 - t) / 6.0 + t / 6.0;
        const double dt_u = (1.0 - u0(p)) / 6.0;
        const double lap_u = lap_u0(p) * (6.0 - t) / 6.0;
        const double cv = c(p);
        return dt_u - lap_u + cv * u + u * std::cbrt(cv * cv) * cv;
      };
      break;
    }
    case ProblemKind::allen_cahn: {
      const auto c = [](const Point& p) {
        if (p.x + p.y >= 1.0) return 4.0;
        return p.x - 2.0 * p.y < -0.4 ? 1.0 : 2.0;
      };
      const auto shape = [](const Point& p) {
        return std::sin(std::numbers::pi / 4.0 * (p.x - 2.0)) *
               std::sin(std::numbers::pi / 2.0 + (p.y - 1.0));
      };
      constexpr double eig = std::numbers::pi * std::numbers::pi / 16.0 + 1.0;
      m.parameter = c;
      m.initial_guess = [](const Point&) { return 0.0; };
      m.state = [shape](const Point& p, double t) { return shape(p) * (10.0 - t) / 10.0 + 1.0; };
      m.initial_state = [s = m.state](const Point& p) { return s(p, 0.0); };
      m.source = [c, shape, eig](const Point& p, double t) {
        const double s = shape(p);
        const double u = s * (10.0 - t) / 10.0 + 1.0;
        const double dt_u = -s / 10.0;
        const double lap_u = -eig * s * (10.0 - t) / 10.0;
        const double cv = c(p);
        return dt_u - lap_u + cv * u * u * u + u * std::cbrt(cv * cv) * cv;
      };
      break;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

GridParameter::GridParameter(std::size_t nx, std::size_t ny, double xmin, double xmax,
                             double ymin, double ymax, std::vector<double> values)
    : nx_(nx), ny_(ny), xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax),
      values_(std::move(values)) {
  if (nx_ == 0 || ny_ == 0) throw InputError("grid parameter: empty grid");
  if (!(xmax_ > xmin_) || !(ymax_ > ymin_)) throw InputError("grid parameter: degenerate bounds");
  if (values_.size() != nx_ * ny_)
    throw InputError("grid parameter: expected " + std::to_string(nx_ * ny_) + " values, got " +
                     std::to_string(values_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw InputError("grid parameter: non-finite value");
}

GridParameter GridParameter::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grid file " + path.string());
  std::size_t nx = 0, ny = 0;
  double xmin, xmax, ymin, ymax;
  if (!(in >> nx >> ny >> xmin >> xmax >> ymin >> ymax))
    throw InputError(path.string() + ": malformed header, expected 'nx ny xmin xmax ymin ymax'");
  std::vector<double> values;
  values.reserve(nx * ny);
  double v;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw InputError(path.string() + ": non-numeric value in grid body");
  return GridParameter(nx, ny, xmin, xmax, ymin, ymax, std::move(values));
}

double GridParameter::operator()(const Point& p) const {
  const auto index = [](double v, double lo, double hi, std::size_t n) {
    const double s = std::floor((v - lo) / (hi - lo) * static_cast<double>(n));
    return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(n - 1)));
  };
  return values_[index(p.y, ymin_, ymax_, ny_) * nx_ + index(p.x, xmin_, xmax_, nx_)];
}

CellField sample_cells(const Mesh& mesh, const std::function<double(const Point&)>& f) {
  std::vector<double> v(mesh.num_triangles());
  for (std::size_t e = 0; e < v.size(); ++e) v[e] = f(mesh.centroid(e));
  return CellField(mesh, std::move(v));
}

NodalField sample_nodes(const Mesh& mesh, const std::function<double(const Point&)>& f) {
  std::vector<double> v(mesh.num_vertices());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(mesh.vertex(i));
  return NodalField(mesh, std::move(v));
}

double random_source_grid_value(std::uint64_t seed, std::size_t step, std::size_t i,
                                std::size_t j) {
  return grid_normal(seed, kSourceStream + step, i, j);
}

NodalField random_source(std::uint64_t seed, std::size_t step, const Mesh& mesh,
                         const Domain& box) {
  return sample_nodes(mesh, [&](const Point& p) {
    return bilinear_grid(seed, kSourceStream + step, p, box);
  });
}

NodalField source_at(const TruthModel& model, const Mesh& mesh, const Domain& domain,
                     std::uint64_t seed, const TimeGrid& grid, std::size_t n) {
  if (model.random_source) return random_source(seed, n, mesh, domain);
  const double t = grid.time(n);
  return sample_nodes(mesh, [&](const Point& p) { return model.source(p, t); });
}

// ---------------------------------------------------------------------------

std::vector<NodalField> forward_solve(const TruthModel& model, const Mesh& mesh,
                                      const Domain& domain, const TimeGrid& grid,
                                      std::uint64_t seed, const ForwardOptions& options) {
  std::vector<NodalField> out;
  out.reserve(grid.n_steps + 1);
  if (model.state) {
    for (std::size_t n = 0; n <= grid.n_steps; ++n) {
      const double t = grid.time(n);
      out.push_back(sample_nodes(mesh, [&](const Point& p) { return model.state(p, t); }));
    }
    return out;
  }

  const double fine_dt = options.fine_dt > 0.0 ? options.fine_dt : grid.dt;
  if (fine_dt > grid.dt * (1.0 + 1e-12))
    throw InputError("truth dt must not exceed the reconstruction dt");
  const auto substeps = static_cast<std::size_t>(std::llround(grid.dt / fine_dt));
  if (std::abs(static_cast<double>(substeps) * fine_dt - grid.dt) > 1e-9 * grid.dt)
    throw InputError("truth dt must divide the reconstruction dt");
  const double h = grid.dt / static_cast<double>(substeps);

  const CellField a = sample_cells(mesh, model.parameter);
  const CsrMatrix mass = assemble_mass(mesh);
  const CsrMatrix stiff = assemble_stiffness(mesh, a);
  const CsrMatrix diffusion = add(1.0, mass, h, stiff);
  const bool fisher = model.kind == ProblemKind::fisher_kpp;
  const std::vector<double> zero(mesh.num_vertices(), 0.0);

  NodalField u = sample_nodes(mesh, model.initial_state);
  zero_boundary(u);
  out.push_back(u);

  for (std::size_t n = 0; n < grid.n_steps; ++n) {
    NodalField g = model.random_source ? random_source(seed, n + 1, mesh, domain) : NodalField();
    for (std::size_t k = 0; k < substeps; ++k) {
      if (!model.random_source) {
        const double t = grid.time(n) + h * static_cast<double>(k + 1);
        g = sample_nodes(mesh, [&](const Point& p) { return model.source(p, t); });
      }
      std::vector<double> rhs = mass.multiply(u.values());
      const auto mg = mass.multiply(g.values());
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += h * mg[i];

      if (!fisher) {
        auto next = solve_with_dirichlet(mesh, diffusion, rhs, zero, u.values(), options.solver);
        u = NodalField(mesh, std::move(next));
        continue;
      }
      // (M + hK + hM - h W(w)) u = M u_old + h M g, W(w) = integral of w phi_i phi_j
      const CsrMatrix base = add(1.0, diffusion, h, mass);
      NodalField lag = u;
      const std::size_t max_picard = options.implicit_reaction ? 200 : 1;
      for (std::size_t it = 0; it < max_picard; ++it) {
        const CsrMatrix sys = add(1.0, base, -h, assemble_weighted_mass(mesh, lag, 1));
        NodalField next(mesh, solve_with_dirichlet(mesh, sys, rhs, zero, lag.values(),
                                                   options.solver));
        const double change = l2_norm(next - lag);
        const double scale = std::max(l2_norm(next), 1e-300);
        lag = std::move(next);
        if (options.implicit_reaction && change <= 1e-13 * scale) break;
        if (options.implicit_reaction && it + 1 == max_picard)
          throw SolverError("implicit reaction iteration did not converge", n + 1);
      }
      u = std::move(lag);
    }
    out.push_back(u);
  }
  return out;
}

std::vector<NodalField> restrict_snapshots(const std::vector<NodalField>& fine,
                                           const Mesh& coarse) {
  std::vector<NodalField> out;
  out.reserve(fine.size());
  for (const auto& f : fine) out.push_back(transfer(f, coarse));
  return out;
}

std::vector<NodalField> add_noise(const std::vector<NodalField>& snapshots, double delta,
                                  std::uint64_t seed, bool per_snapshot) {
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw InputError("noise level must be nonnegative and finite");
  if (delta == 0.0) return snapshots;
  std::vector<NodalField> out;
  out.reserve(snapshots.size());
  for (std::size_t n = 0; n < snapshots.size(); ++n) {
    const NodalField& u = snapshots[n];
    const double u_norm = l2_norm(u);
    if (!(u_norm > 0.0))
      throw InputError("cannot scale relative noise on a zero snapshot (index " +
                       std::to_string(n) + ")");
    const std::uint64_t stream = kNoiseStream + (per_snapshot ? n : 0);
    std::vector<double> eps(u.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng::normal(seed, stream, i);
    const double scale = delta * u_norm / l2_norm_nodal(u.mesh(), eps);
    std::vector<double> z(u.values().begin(), u.values().end());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += scale * eps[i];
    out.emplace_back(u.mesh(), std::move(z));
  }
  return out;
}

StateRange state_range(const std::vector<NodalField>& snapshots) {
  StateRange r{INFINITY, -INFINITY};
  for (const auto& s : snapshots)
    for (double v : s.values()) {
      r.min = std::min(r.min, v);
      r.max = std::max(r.max, v);
    }
  return r;
}

Dataset synthesize(const Mesh& mesh, double mesh_h, const SynthesisOptions& options) {
  Dataset d;
  d.model = make_truth(options.kind, options.seed);
  if (options.truth_grid_file) {
    auto grid_param = std::make_shared<GridParameter>(GridParameter::load(*options.truth_grid_file));
    d.model.parameter = [grid_param](const Point& p) { return (*grid_param)(p); };
  }
  const Domain domain = Domain::for_kind(options.kind);
  const TimeGrid& grid = options.grid;

  if (closed_form(options.kind)) {
    d.truth.fine_mesh = std::shared_ptr<const Mesh>(&mesh, [](const Mesh*) {});
    d.truth.u_true = forward_solve(d.model, mesh, domain, grid, options.seed, {});
    const auto range = state_range(d.truth.u_true);
    if (!(range.min > 0.0))
      throw DataError(to_string(options.kind) + ": truth state is not positive (min " +
                      std::to_string(range.min) + ")");
  } else if (options.consistent) {
    d.truth.fine_mesh = std::shared_ptr<const Mesh>(&mesh, [](const Mesh*) {});
    ForwardOptions fwd;
    fwd.fine_dt = grid.dt;
    fwd.implicit_reaction = true;
    fwd.solver.tol = 1e-13;
    d.truth.u_true = forward_solve(d.model, mesh, domain, grid, options.seed, fwd);
  } else {
    if (!(options.truth_h > 0.0) || options.truth_h > 0.75 * mesh_h)
      throw InputError("truth h_max must be positive and at most 0.75 x the reconstruction h_max");
    ForwardOptions fwd;
    fwd.fine_dt = options.truth_dt > 0.0 ? options.truth_dt : grid.dt;
    auto fine = std::make_shared<const Mesh>(domain.mesh(options.truth_h));
    d.truth.fine_mesh = fine;
    d.truth.u_fine = forward_solve(d.model, *fine, domain, grid, options.seed, fwd);
    d.truth.u_true = restrict_snapshots(d.truth.u_fine, mesh);
  }
  d.truth.q_true = sample_cells(mesh, d.model.parameter);

  d.observations.grid = grid;
  d.observations.noise_level = options.noise;
  d.observations.seed = options.seed;
  d.observations.snapshots =
      add_noise(d.truth.u_true, options.noise, options.seed, options.noise_per_snapshot);
  d.observations.sources.reserve(grid.n_steps + 1);
  for (std::size_t n = 0; n <= grid.n_steps; ++n)
    d.observations.sources.push_back(source_at(d.model, mesh, domain, options.seed, grid, n));

  d.q0 = sample_cells(mesh, d.model.initial_guess);
  d.u0 = d.observations.snapshots.front();
  return d;
}

}  // namespace mras

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "mras/benchmarks.hpp"
#include "mras/core.hpp"
#include "mras/fem.hpp"

namespace mras {

struct Domain {
  enum class Shape { rectangle, disk };
  Shape shape = Shape::rectangle;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  double radius = 0.0;  // disk centred at the origin

  Mesh mesh(double h_max) const;
  static Domain for_kind(ProblemKind kind);
};

/// Closed-form ingredients of one benchmark. Members left empty are not
/// available in closed form (state of the simulated kinds, random source).
struct TruthModel {
  ProblemKind kind = ProblemKind::darcy;
  std::function<double(const Point&)> parameter;
  std::function<double(const Point&)> initial_guess;
  std::function<double(const Point&)> initial_state;
  std::function<double(const Point&, double)> state;
  std::function<double(const Point&, double)> source;
  bool random_source = false;
};

TruthModel make_truth(ProblemKind kind, std::uint64_t seed = 0);

/// Piecewise-constant parameter read from a text grid:
/// "nx ny xmin xmax ymin ymax" followed by nx*ny values, row-major in y.
class GridParameter {
 public:
  static GridParameter load(const std::filesystem::path& path);
  GridParameter(std::size_t nx, std::size_t ny, double xmin, double xmax, double ymin,
                double ymax, std::vector<double> values);
  double operator()(const Point& p) const;

 private:
  std::size_t nx_, ny_;
  double xmin_, xmax_, ymin_, ymax_;
  std::vector<double> values_;
};

CellField sample_cells(const Mesh& mesh, const std::function<double(const Point&)>& f);
NodalField sample_nodes(const Mesh& mesh, const std::function<double(const Point&)>& f);

inline constexpr std::size_t kSourceGridSize = 128;

/// Bilinear interpolation of a 128x128 N(0,1) grid spanning the given box.
/// The grid depends only on (seed, step), not on the mesh.
NodalField random_source(std::uint64_t seed, std::size_t step, const Mesh& mesh,
                         const Domain& box);
/// Raw grid value (i, j) of the source at `step`.
double random_source_grid_value(std::uint64_t seed, std::size_t step, std::size_t i,
                                std::size_t j);

/// Source g(., t_n) on `mesh` for coarse step n.
NodalField source_at(const TruthModel& model, const Mesh& mesh, const Domain& domain,
                     std::uint64_t seed, const TimeGrid& grid, std::size_t n);

struct ForwardOptions {
  double fine_dt = 0.0;
  /// Fully implicit reaction (Picard to convergence) instead of one lagged solve.
  bool implicit_reaction = false;
  SolveOptions solver{1e-12, 0, Preconditioner::jacobi, false};
};

/// Truth states at the coarse time points on `mesh`. Simulated kinds step
/// with fine_dt; closed-form kinds are sampled at the nodes.
std::vector<NodalField> forward_solve(const TruthModel& model, const Mesh& mesh,
                                      const Domain& domain, const TimeGrid& grid,
                                      std::uint64_t seed, const ForwardOptions& options);

std::vector<NodalField> restrict_snapshots(const std::vector<NodalField>& fine,
                                           const Mesh& coarse);

/// z = u + (delta |u| / |eps|) eps per snapshot, eps i.i.d. N(0,1) nodal.
/// With per_snapshot = false a single realization is reused for all snapshots.
std::vector<NodalField> add_noise(const std::vector<NodalField>& snapshots, double delta,
                                  std::uint64_t seed, bool per_snapshot = true);

struct TruthBundle {
  std::shared_ptr<const Mesh> fine_mesh;
  std::vector<NodalField> u_fine;  // empty for closed-form kinds
  CellField q_true;
  std::vector<NodalField> u_true;  // on the reconstruction mesh
};

struct SynthesisOptions {
  ProblemKind kind = ProblemKind::darcy;
  TimeGrid grid;
  double truth_h = 0.0;
  double truth_dt = 0.0;  // 0: same as grid.dt
  double noise = 0.0;
  bool noise_per_snapshot = true;
  std::uint64_t seed = 0;
  /// Generate data with the reconstruction discretization itself (same mesh,
  /// same dt, implicit reaction). Used for stationarity checks.
  bool consistent = false;
  std::optional<std::filesystem::path> truth_grid_file;
};

struct Dataset {
  TruthModel model;
  TruthBundle truth;
  ObservationSeries observations;
  CellField q0;
  NodalField u0;
};

/// Throws InputError when truth_h > 0.75 * reconstruction h or truth_dt > dt,
/// DataError when a positivity-constrained truth is not positive.
Dataset synthesize(const Mesh& mesh, double mesh_h, const SynthesisOptions& options);

struct StateRange {
  double min = 0.0;
  double max = 0.0;
};
StateRange state_range(const std::vector<NodalField>& snapshots);

}  // namespace mras

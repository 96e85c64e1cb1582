#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mras/diagnostics.hpp"
#include "mras/fem.hpp"

namespace mras {

struct TimeGrid {
  double dt = 0.0;
  std::size_t n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double dt, std::size_t n_steps);
  /// n_steps = round(T / dt); T must be a whole number of steps up to 1e-9 relative.
  static TimeGrid from_final_time(double dt, double final_time);

  double final_time() const { return dt * static_cast<double>(n_steps); }
  double time(std::size_t n) const { return dt * static_cast<double>(n); }
};

struct MrasState {
  CellField q;
  NodalField u;
  std::size_t step_index = 0;
};

struct StepInputs {
  NodalField z_n;
  NodalField z_np1;
  NodalField g_np1;
  NodalField dz_dt;
};

/// One benchmark's discrete update law. The parameter update must not
/// depend on the new state.
class Problem {
 public:
  virtual ~Problem() = default;
  virtual std::string name() const = 0;
  virtual CellField update_parameter(const MrasState& state, const StepInputs& in,
                                     double dt) const = 0;
  virtual NodalField solve_state(const MrasState& state, const CellField& q_next,
                                 const StepInputs& in, double dt) const = 0;
};

/// Observations and sources on the reconstruction mesh at t_0..t_N.
/// sources[0] is kept for completeness but never read by the stepper.
struct ObservationSeries {
  TimeGrid grid;
  std::vector<NodalField> snapshots;
  std::vector<NodalField> sources;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

/// Backward difference (z_{n+1} - z_n) / dt.
NodalField backward_difference(const NodalField& z_n, const NodalField& z_np1, double dt);

StepInputs step_inputs(const ObservationSeries& obs, std::size_t n);

/// Advances (q_n, u_n) to (q_{n+1}, u_{n+1}). Solver failures are rethrown
/// with the step index attached.
MrasState mras_step(const Problem& problem, const MrasState& state, const StepInputs& inputs,
                    const TimeGrid& grid);

struct Snapshot {
  double t;
  std::size_t step;
  CellField q;
  NodalField u;
};

struct RunOptions {
  std::vector<double> snapshot_times;
  double discrepancy_threshold = 1e-3;
  /// Optional per-step hook, called after each recorded sample.
  std::function<void(const MrasState&, const ErrorSample&)> on_step;
};

struct RunResult {
  MrasState final_state;
  ErrorSeries errors;
  std::vector<Snapshot> snapshots;
  std::optional<std::size_t> discrepancy_step;
};

/// Iterates mras_step over the whole observation window. u_true must hold
/// the truth on the reconstruction mesh at every time point.
RunResult run(const Problem& problem, const MrasState& initial, const ObservationSeries& obs,
              const CellField& q_true, const std::vector<NodalField>& u_true,
              const RunOptions& options = {});

/// Step index nearest to each requested time, deduplicated and sorted.
std::vector<std::size_t> snapshot_steps(const TimeGrid& grid, const std::vector<double>& times);

}  // namespace mras

#include "mras/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mras/error.hpp"

namespace mras {

TimeGrid::TimeGrid(double dt_, std::size_t n) : dt(dt_), n_steps(n) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive and finite");
}

TimeGrid TimeGrid::from_final_time(double dt, double final_time) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive and finite");
  if (!(final_time >= 0.0) || !std::isfinite(final_time))
    throw InputError("T must be nonnegative and finite");
  const double steps = std::round(final_time / dt);
  if (std::abs(steps * dt - final_time) > 1e-9 * std::max(1.0, final_time))
    throw InputError("T is not a whole number of time steps");
  return TimeGrid(dt, static_cast<std::size_t>(steps));
}

NodalField backward_difference(const NodalField& z_n, const NodalField& z_np1, double dt) {
  return (1.0 / dt) * (z_np1 - z_n);
}

StepInputs step_inputs(const ObservationSeries& obs, std::size_t n) {
  if (n + 1 >= obs.snapshots.size() || n + 1 >= obs.sources.size())
    throw InputError("observation series does not cover step " + std::to_string(n + 1));
  const auto& z_n = obs.snapshots[n];
  const auto& z_np1 = obs.snapshots[n + 1];
  return {z_n, z_np1, obs.sources[n + 1], backward_difference(z_n, z_np1, obs.grid.dt)};
}

MrasState mras_step(const Problem& problem, const MrasState& state, const StepInputs& inputs,
                    const TimeGrid& grid) {
  const Mesh& mesh = state.u.mesh();
  require_same_mesh(mesh, state.q.mesh(), "mras_step");
  require_same_mesh(mesh, inputs.z_n.mesh(), "mras_step");
  require_same_mesh(mesh, inputs.z_np1.mesh(), "mras_step");
  require_same_mesh(mesh, inputs.g_np1.mesh(), "mras_step");
  require_same_mesh(mesh, inputs.dz_dt.mesh(), "mras_step");

  MrasState next;
  next.step_index = state.step_index + 1;
  try {
    next.q = problem.update_parameter(state, inputs, grid.dt);
    next.u = problem.solve_state(state, next.q, inputs, grid.dt);
  } catch (const SolverError& e) {
    throw SolverError(e.what(), state.step_index + 1);
  }
  if (!next.q.all_finite() || !next.u.all_finite())
    throw SolverError(problem.name() + ": non-finite values", next.step_index);
  return next;
}

std::vector<std::size_t> snapshot_steps(const TimeGrid& grid, const std::vector<double>& times) {
  std::vector<std::size_t> steps;
  for (double t : times) {
    if (!(t >= 0.0) || t > grid.final_time() + 0.5 * grid.dt) continue;
    steps.push_back(static_cast<std::size_t>(std::llround(t / grid.dt)));
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

RunResult run(const Problem& problem, const MrasState& initial, const ObservationSeries& obs,
              const CellField& q_true, const std::vector<NodalField>& u_true,
              const RunOptions& options) {
  const std::size_t n_steps = obs.grid.n_steps;
  if (obs.snapshots.size() != n_steps + 1)
    throw InputError("observation series has " + std::to_string(obs.snapshots.size()) +
                     " snapshots, expected " + std::to_string(n_steps + 1));
  if (obs.sources.size() != n_steps + 1)
    throw InputError("source series length does not match the time grid");
  if (u_true.size() != n_steps + 1)
    throw InputError("truth series length does not match the time grid");

  RunResult result;
  result.final_state = initial;
  const auto wanted = snapshot_steps(obs.grid, options.snapshot_times);
  auto next_snapshot = wanted.begin();

  const auto observe = [&](const MrasState& s, std::size_t n) {
    const double t = obs.grid.time(n);
    const auto sample = record(q_true, u_true[n], s.q, s.u, t);
    result.errors.push(sample);
    if (next_snapshot != wanted.end() && *next_snapshot == n) {
      result.snapshots.push_back({t, n, s.q, s.u});
      ++next_snapshot;
    }
    if (!result.discrepancy_step && n > 0) {
      const double zn = l2_norm(obs.snapshots[n]);
      if (zn > 0.0 && l2_norm(s.u - obs.snapshots[n]) < options.discrepancy_threshold * zn)
        result.discrepancy_step = n;
    }
    if (options.on_step) options.on_step(s, sample);
  };

  observe(result.final_state, 0);
  for (std::size_t n = 0; n < n_steps; ++n) {
    result.final_state = mras_step(problem, result.final_state, step_inputs(obs, n), obs.grid);
    observe(result.final_state, n + 1);
  }
  return result;
}

}  // namespace mras

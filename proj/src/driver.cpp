#include "mras/driver.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>
#include <fstream>
#include <thread>

#include "mras/error.hpp"

namespace mras {

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CellField initial_parameter(const RunConfig& cfg, const Mesh& mesh, const Dataset& data) {
  const auto& g = cfg.initial_guess;
  using K = InitialGuess::Kind;
  switch (g.kind) {
    case K::benchmark_default: return data.q0;
    case K::zero: return CellField(mesh, 0.0);
    case K::truth: return data.truth.q_true;
    case K::constant: return CellField(mesh, g.args[0]);
    case K::ball:
      return sample_cells(mesh, [&](const Point& p) {
        const double dx = p.x - g.args[0], dy = p.y - g.args[1];
        return dx * dx + dy * dy < g.args[2] * g.args[2] ? 1.0 : 0.0;
      });
    case K::box:
      return sample_cells(mesh, [&](const Point& p) {
        return p.x >= g.args[0] && p.x <= g.args[1] && p.y >= g.args[2] && p.y <= g.args[3]
                   ? 1.0
                   : 0.0;
      });
  }
  return data.q0;
}

}  // namespace

std::string delta_dir_name(double delta) { return "delta_" + shortest(delta); }

Experiment prepare(const RunConfig& cfg, double delta) {
  cfg.validate();
  Experiment ex;
  const Domain domain = Domain::for_kind(cfg.kind);
  ex.mesh = std::make_unique<Mesh>(domain.mesh(cfg.mesh_h));

  SynthesisOptions so;
  so.kind = cfg.kind;
  so.grid = TimeGrid::from_final_time(cfg.dt, cfg.final_time);
  so.truth_h = cfg.truth_h;
  so.truth_dt = cfg.truth_dt;
  so.noise = delta;
  so.noise_per_snapshot = cfg.noise_per_snapshot;
  so.seed = cfg.seed;
  so.consistent = cfg.consistent_data;
  so.truth_grid_file = cfg.truth_grid_file;
  ex.data = synthesize(*ex.mesh, cfg.mesh_h, so);

  ex.spec = ProblemSpec::defaults(cfg.kind, *ex.mesh);
  ex.spec.uniform_time_index = cfg.uniform_time_index;
  ex.stabilizer = cfg.stabilizer;
  if (!cfg.stabilizer_bound_set)
    ex.stabilizer.true_param_norm_bound = l2_norm(ex.data.truth.q_true);

  if (cfg.kind == ProblemKind::nonlinear_potential || cfg.kind == ProblemKind::allen_cahn) {
    const auto range = state_range(ex.data.truth.u_true);
    spdlog::info("{}: truth state range [{:.4g}, {:.4g}], stabilizer bounds [{:.4g}, {:.4g}]",
                 to_string(cfg.kind), range.min, range.max, ex.stabilizer.z_lower,
                 ex.stabilizer.z_upper);
    if (range.min < ex.stabilizer.z_lower || range.max > ex.stabilizer.z_upper)
      spdlog::warn("{}: truth state leaves the configured positivity bounds",
                   to_string(cfg.kind));
  }

  ex.initial.q = initial_parameter(cfg, *ex.mesh, ex.data);
  ex.initial.u = cfg.initial_state_truth ? ex.data.truth.u_true.front() : ex.data.u0;
  ex.initial.step_index = 0;
  return ex;
}

RunResult execute(const Experiment& ex, const RunConfig& cfg) {
  const auto problem = make_problem(*ex.mesh, ex.spec, ex.stabilizer);
  RunOptions opts;
  opts.snapshot_times = cfg.snapshot_times;
  opts.discrepancy_threshold = cfg.discrepancy_threshold;
  return run(*problem, ex.initial, ex.data.observations, ex.data.truth.q_true,
             ex.data.truth.u_true, opts);
}

bool BenchmarkOutcome::ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const DeltaOutcome& r) { return r.ok; });
}

namespace {

DeltaOutcome run_one(const RunConfig& cfg, double delta) {
  DeltaOutcome out;
  out.delta = delta;
  out.dir = cfg.output_dir / delta_dir_name(delta);
  const auto start = std::chrono::steady_clock::now();
  try {
    const Experiment ex = prepare(cfg, delta);
    const RunResult result = execute(ex, cfg);
    std::filesystem::create_directories(out.dir);
    export_csv(result.errors, out.dir / "errors.csv");

    const auto& obs = ex.data.observations;
    for (const auto& snap : result.snapshots) {
      const NodalField& z = obs.snapshots[snap.step];
      const NodalField& ut = ex.data.truth.u_true[snap.step];
      export_vtk(*ex.mesh, {{"u", &snap.u}, {"z", &z}, {"u_true", &ut}},
                 {{"q", &snap.q}, {"q_true", &ex.data.truth.q_true}},
                 out.dir / ("snapshot_" + std::to_string(snap.step) + ".vtk"),
                 to_string(cfg.kind) + " t=" + shortest(snap.t));
    }

    out.report = make_report(result.errors);
    out.report.config = cfg.echo();
    out.report.config.emplace_back("run.delta", shortest(delta));
    out.report.discrepancy_step = result.discrepancy_step;
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    export_report(out.report, out.dir / "report.txt");
    out.ok = true;
    spdlog::info("{} delta={}: eq {:.4g} -> {:.4g}, eu {:.4g} -> {:.4g}, {} monotonicity violations",
                 to_string(cfg.kind), shortest(delta), out.report.initial_eq, out.report.final_eq,
                 out.report.initial_eu, out.report.final_eu, out.report.monotonicity.violations);
  } catch (const SolverError& e) {
    out.error = e.what();
    if (e.step()) out.error += " (step " + std::to_string(*e.step()) + ")";
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  if (!out.ok) spdlog::error("{} delta={}: {}", to_string(cfg.kind), shortest(delta), out.error);
  return out;
}

}  // namespace

BenchmarkOutcome run_benchmark(const RunConfig& cfg, bool parallel) {
  cfg.validate();
  BenchmarkOutcome outcome;
  outcome.runs.resize(cfg.noise_levels.size());
  if (parallel && cfg.noise_levels.size() > 1) {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < cfg.noise_levels.size(); ++i)
      workers.emplace_back([&, i] { outcome.runs[i] = run_one(cfg, cfg.noise_levels[i]); });
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < cfg.noise_levels.size(); ++i)
      outcome.runs[i] = run_one(cfg, cfg.noise_levels[i]);
  }
  return outcome;
}

BenchmarkOutcome synthesize_data(const RunConfig& cfg) {
  cfg.validate();
  BenchmarkOutcome outcome;
  for (double delta : cfg.noise_levels) {
    DeltaOutcome out;
    out.delta = delta;
    out.dir = cfg.output_dir / delta_dir_name(delta);
    try {
      const Experiment ex = prepare(cfg, delta);
      std::filesystem::create_directories(out.dir);
      const auto& obs = ex.data.observations;
      {
        const auto path = out.dir / "observations.csv";
        std::ofstream csv(path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot open " + path.string());
        csv << "t,z_norm,g_norm,u_true_norm\n";
        for (std::size_t n = 0; n < obs.snapshots.size(); ++n)
          csv << format_double(obs.grid.time(n)) << ',' << format_double(l2_norm(obs.snapshots[n]))
              << ',' << format_double(l2_norm(obs.sources[n])) << ','
              << format_double(l2_norm(ex.data.truth.u_true[n])) << '\n';
        if (!csv) throw std::runtime_error("write failed: " + path.string());
      }
      for (auto step : snapshot_steps(obs.grid, cfg.snapshot_times)) {
        export_vtk(*ex.mesh,
                   {{"z", &obs.snapshots[step]}, {"g", &obs.sources[step]},
                    {"u_true", &ex.data.truth.u_true[step]}},
                   {}, out.dir / ("data_" + std::to_string(step) + ".vtk"));
      }
      export_vtk(*ex.mesh, {}, {{"q_true", &ex.data.truth.q_true}, {"q0", &ex.initial.q}},
                 out.dir / "truth.vtk");
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
      spdlog::error("{} delta={}: {}", to_string(cfg.kind), shortest(delta), out.error);
    }
    outcome.runs.push_back(std::move(out));
  }
  return outcome;
}

void list_benchmarks(std::ostream& out, bool machine_readable) {
  struct Entry {
    ProblemKind kind;
    const char* pde;
    const char* unknown;
  };
  const Entry entries[] = {
      {ProblemKind::darcy, "u_t - div(a grad u) = g, u = 0 on the boundary", "diffusion a"},
      {ProblemKind::fisher_kpp, "u_t - div(a grad u) + u - u^2 = g, u = 0 on the boundary",
       "diffusion a"},
      {ProblemKind::nonlinear_potential, "u_t - lap u + c u + |c|^{2/3} c u = g, u = h on the boundary",
       "potential c"},
      {ProblemKind::allen_cahn, "u_t - lap u + c u^3 + |c|^{2/3} c u = g, u = h on the boundary",
       "potential c"},
  };
  for (const auto& e : entries) {
    const RunConfig c = RunConfig::defaults(e.kind);
    const std::string name = to_string(e.kind);
    if (machine_readable) {
      out << name << ".pde=" << e.pde << '\n';
      out << name << ".unknown=" << e.unknown << '\n';
      for (const auto& [k, v] : c.echo())
        if (k != "benchmark") out << name << '.' << k << '=' << v << '\n';
    } else {
      out << name << "\n  " << e.pde << "\n  unknown: " << e.unknown << "\n  defaults:";
      for (const auto& [k, v] : c.echo())
        if (k != "benchmark") out << ' ' << k << '=' << v << ';';
      out << '\n';
    }
  }
}

}  // namespace mras

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mras/config.hpp"
#include "mras/core.hpp"
#include "mras/synth.hpp"

namespace mras {

/// Everything one MRAS run needs, built from a config and a noise level.
struct Experiment {
  std::unique_ptr<Mesh> mesh;
  Dataset data;
  ProblemSpec spec;
  StabilizerConfig stabilizer;
  MrasState initial;
};

Experiment prepare(const RunConfig& cfg, double delta);
RunResult execute(const Experiment& ex, const RunConfig& cfg);

struct DeltaOutcome {
  double delta = 0.0;
  std::filesystem::path dir;
  bool ok = false;
  std::string error;
  RunReport report;
};

struct BenchmarkOutcome {
  std::vector<DeltaOutcome> runs;
  bool ok() const;
};

/// Runs every noise level (concurrently when parallel is set) and writes
/// delta_<level>/{errors.csv, report.txt, snapshot_<step>.vtk} under cfg.output_dir.
BenchmarkOutcome run_benchmark(const RunConfig& cfg, bool parallel = true);

/// Data only: delta_<level>/{observations.csv, data_<step>.vtk} and truth.vtk.
BenchmarkOutcome synthesize_data(const RunConfig& cfg);

void list_benchmarks(std::ostream& out, bool machine_readable);

std::string delta_dir_name(double delta);

}  // namespace mras

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mras/benchmarks.hpp"

namespace mras {

/// Initial parameter guess.
struct InitialGuess {
  enum class Kind { benchmark_default, zero, constant, ball, box, truth };
  Kind kind = Kind::benchmark_default;
  std::vector<double> args;  // ball: cx cy r; box: xmin xmax ymin ymax; constant: v

  static InitialGuess parse(const std::string& text);
  std::string to_string() const;
};

struct RunConfig {
  ProblemKind kind = ProblemKind::darcy;
  double mesh_h = 0.15;
  double truth_h = 0.1;
  double dt = 0.005;
  double truth_dt = 0.0;  // 0: same as dt
  double final_time = 2.0;
  std::vector<double> noise_levels{0.0};
  bool noise_per_snapshot = true;
  std::uint64_t seed = 1;
  InitialGuess initial_guess;
  bool initial_state_truth = false;  // otherwise the first observation
  bool consistent_data = false;
  std::optional<std::filesystem::path> truth_grid_file;
  StabilizerConfig stabilizer;
  bool stabilizer_bound_set = false;  // else the truth parameter norm is used
  bool uniform_time_index = false;
  std::vector<double> snapshot_times;
  double discrepancy_threshold = 1e-3;
  std::filesystem::path output_dir = "out";

  /// Desk-scale defaults for one benchmark.
  static RunConfig defaults(ProblemKind kind);
  /// Throws InputError naming the offending field.
  void validate() const;
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Flat "key = value" text with dotted sections; '#' starts a comment.
/// Relative paths inside the file resolve against its directory.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

std::vector<double> parse_double_list(const std::string& text, const std::string& field);

}  // namespace mras

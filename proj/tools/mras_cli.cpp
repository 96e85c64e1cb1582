// Batch driver: run, list, synthesize.
// Log verbosity follows SPDLOG_LEVEL (e.g. SPDLOG_LEVEL=debug).

#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "mras/config.hpp"
#include "mras/driver.hpp"
#include "mras/error.hpp"

namespace {

struct Overrides {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string snapshots;
};

mras::RunConfig load_with_overrides(const std::string& path, const Overrides& o) {
  mras::RunConfig cfg = mras::load_config(path);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.snapshots.empty()) cfg.snapshot_times = mras::parse_double_list(o.snapshots, "--snapshots");
  cfg.validate();
  return cfg;
}

int report(const mras::BenchmarkOutcome& outcome) {
  for (const auto& r : outcome.runs) {
    if (r.ok)
      std::cout << r.dir.string() << ": ok\n";
    else
      std::cout << r.dir.string() << ": FAILED: " << r.error << '\n';
  }
  return outcome.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  CLI::App app{"Online parameter identification for parabolic PDEs"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Run configuration (key = value)")->required();
    sub->add_option("--out", overrides.out, "Output directory");
    sub->add_option("--seed", overrides.seed, "Random seed");
    sub->add_option("--snapshots", overrides.snapshots, "Comma-separated snapshot times");
  };

  auto* run = app.add_subcommand("run", "Synthesize data and run the identification");
  add_common(run);
  bool serial = false;
  run->add_flag("--serial", serial, "Run noise levels one after another");

  auto* synth = app.add_subcommand("synthesize", "Write synthetic observations only");
  add_common(synth);

  auto* list = app.add_subcommand("list", "List the available benchmarks");
  bool machine = false;
  list->add_flag("--machine", machine, "Stable key=value output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return app.exit(e);
  }

  try {
    if (list->parsed()) {
      mras::list_benchmarks(std::cout, machine);
      return 0;
    }
    const auto cfg = load_with_overrides(config_path, overrides);
    if (run->parsed()) return report(mras::run_benchmark(cfg, !serial));
    return report(mras::synthesize_data(cfg));
  } catch (const mras::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

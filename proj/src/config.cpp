#include "mras/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mras/diagnostics.hpp"
#include "mras/error.hpp"

namespace mras {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw InputError(field + ": expected a number, got '" + t + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw InputError(field + ": expected an unsigned integer, got '" + t + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw InputError(field + ": expected true or false, got '" + t + "'");
}

std::string short_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + short_double(v[i]);
  return s;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(item, field));
  }
  return out;
}

InitialGuess InitialGuess::parse(const std::string& raw) {
  const std::string text = trim(raw);
  InitialGuess g;
  if (text == "default") return g;
  if (text == "zero") {
    g.kind = Kind::zero;
    return g;
  }
  if (text == "truth") {
    g.kind = Kind::truth;
    return g;
  }
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw InputError("initial.guess: unrecognized descriptor '" + text + "'");
  const std::string name = trim(text.substr(0, open));
  g.args = parse_double_list(text.substr(open + 1, text.size() - open - 2), "initial.guess");
  std::size_t want = 0;
  if (name == "ball") {
    g.kind = Kind::ball;
    want = 3;
  } else if (name == "box") {
    g.kind = Kind::box;
    want = 4;
  } else if (name == "constant") {
    g.kind = Kind::constant;
    want = 1;
  } else {
    throw InputError("initial.guess: unknown shape '" + name + "'");
  }
  if (g.args.size() != want)
    throw InputError("initial.guess: " + name + " takes " + std::to_string(want) + " arguments");
  if (g.kind == Kind::ball && !(g.args[2] > 0.0))
    throw InputError("initial.guess: ball radius must be positive");
  return g;
}

std::string InitialGuess::to_string() const {
  switch (kind) {
    case Kind::benchmark_default: return "default";
    case Kind::zero: return "zero";
    case Kind::truth: return "truth";
    case Kind::constant: return "constant(" + join(args) + ")";
    case Kind::ball: return "ball(" + join(args) + ")";
    case Kind::box: return "box(" + join(args) + ")";
  }
  return "default";
}

RunConfig RunConfig::defaults(ProblemKind kind) {
  RunConfig c;
  c.kind = kind;
  c.stabilizer = StabilizerConfig::defaults(kind);
  switch (kind) {
    case ProblemKind::darcy:
      c.mesh_h = 0.15;
      c.truth_h = 0.1;
      c.snapshot_times = {0, 0.01, 0.075, 0.1, 0.5, 1, 2};
      break;
    case ProblemKind::fisher_kpp:
      c.mesh_h = 0.15;
      c.truth_h = 0.1;
      c.noise_levels = {0.0, 0.03};
      c.snapshot_times = {0, 0.005, 0.05, 0.1, 0.5, 1, 2};
      break;
    case ProblemKind::nonlinear_potential:
      c.mesh_h = 0.25;
      c.truth_h = 0.15;
      c.noise_levels = {0.0, 0.05};
      c.snapshot_times = {0, 0.05, 0.2, 0.5, 1, 2};
      break;
    case ProblemKind::allen_cahn:
      c.mesh_h = 0.2;
      c.truth_h = 0.15;
      c.noise_levels = {0.0, 0.05, 0.1, 0.2};
      c.snapshot_times = {0, 0.05, 0.2, 0.5, 1, 2};
      break;
  }
  c.output_dir = "out/" + to_string(kind);
  return c;
}

void RunConfig::validate() const {
  const auto finite_positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw InputError(std::string(field) + ": must be positive and finite");
  };
  finite_positive(dt, "time.dt");
  finite_positive(final_time, "time.T");
  finite_positive(mesh_h, "mesh.h");
  const bool closed_form =
      kind == ProblemKind::nonlinear_potential || kind == ProblemKind::allen_cahn;
  if (!closed_form && !consistent_data) {
    finite_positive(truth_h, "truth.h");
    if (truth_h > 0.75 * mesh_h)
      throw InputError("truth.h: must be at most 0.75 x mesh.h (" + short_double(0.75 * mesh_h) +
                       ")");
  }
  if (truth_dt < 0.0 || !std::isfinite(truth_dt))
    throw InputError("truth.dt: must be nonnegative");
  if (truth_dt > dt) throw InputError("truth.dt: must not exceed time.dt");
  const double steps = std::round(final_time / dt);
  if (std::abs(steps * dt - final_time) > 1e-9 * std::max(1.0, final_time))
    throw InputError("time.T: must be a whole number of time.dt steps");
  if (noise_levels.empty()) throw InputError("noise.delta: at least one level required");
  for (double d : noise_levels)
    if (!(d >= 0.0) || !std::isfinite(d)) throw InputError("noise.delta: levels must be >= 0");
  for (double t : snapshot_times)
    if (!(t >= 0.0)) throw InputError("output.snapshots: times must be >= 0");
  if (!(discrepancy_threshold > 0.0)) throw InputError("discrepancy.threshold: must be positive");
  stabilizer.validate();
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e{
      {"benchmark", to_string(kind)},
      {"mesh.h", short_double(mesh_h)},
      {"truth.h", short_double(truth_h)},
      {"time.dt", short_double(dt)},
      {"truth.dt", short_double(truth_dt > 0 ? truth_dt : dt)},
      {"time.T", short_double(final_time)},
      {"noise.delta", join(noise_levels)},
      {"noise.per_snapshot", noise_per_snapshot ? "true" : "false"},
      {"seed", std::to_string(seed)},
      {"initial.guess", initial_guess.to_string()},
      {"initial.state", initial_state_truth ? "truth" : "data"},
      {"data.mode", consistent_data ? "consistent" : "synthetic"},
      {"scheme.uniform_time_index", uniform_time_index ? "true" : "false"},
  };
  if (truth_grid_file) e.emplace_back("truth.grid_file", truth_grid_file->string());
  if (kind == ProblemKind::nonlinear_potential || kind == ProblemKind::allen_cahn) {
    e.emplace_back("stabilizer.z_lower", short_double(stabilizer.z_lower));
    e.emplace_back("stabilizer.z_upper", short_double(stabilizer.z_upper));
    e.emplace_back("stabilizer.embedding_constant", short_double(stabilizer.embedding_constant));
    e.emplace_back("stabilizer.scale", short_double(stabilizer.scale));
    e.emplace_back("stabilizer.M", short_double(stabilizer.M));
    e.emplace_back("stabilizer.true_param_norm_bound",
                   stabilizer_bound_set ? short_double(stabilizer.true_param_norm_bound) : "truth");
  }
  return e;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError("config line " + std::to_string(lineno) + ": empty key");
    if (entries.count(key)) throw InputError(key + ": given more than once");
    entries[key] = {trim(line.substr(eq + 1)), lineno};
  }

  const auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string v = it->second.first;
    entries.erase(it);
    return v;
  };

  const auto kind_text = take("benchmark");
  if (!kind_text) throw InputError("benchmark: required");
  RunConfig c = RunConfig::defaults(parse_problem_kind(*kind_text));

  if (auto v = take("mesh.h")) c.mesh_h = parse_double(*v, "mesh.h");
  if (auto v = take("truth.h")) c.truth_h = parse_double(*v, "truth.h");
  if (auto v = take("time.dt")) c.dt = parse_double(*v, "time.dt");
  if (auto v = take("truth.dt")) c.truth_dt = parse_double(*v, "truth.dt");
  if (auto v = take("time.T")) c.final_time = parse_double(*v, "time.T");
  if (auto v = take("noise.delta")) c.noise_levels = parse_double_list(*v, "noise.delta");
  if (auto v = take("noise.per_snapshot")) c.noise_per_snapshot = parse_bool(*v, "noise.per_snapshot");
  if (auto v = take("seed")) c.seed = parse_u64(*v, "seed");
  if (auto v = take("initial.guess")) c.initial_guess = InitialGuess::parse(*v);
  if (auto v = take("initial.state")) {
    if (*v == "truth") c.initial_state_truth = true;
    else if (*v == "data") c.initial_state_truth = false;
    else throw InputError("initial.state: expected 'data' or 'truth'");
  }
  if (auto v = take("data.mode")) {
    if (*v == "consistent") c.consistent_data = true;
    else if (*v == "synthetic") c.consistent_data = false;
    else throw InputError("data.mode: expected 'synthetic' or 'consistent'");
  }
  if (auto v = take("truth.grid_file")) {
    std::filesystem::path p(*v);
    c.truth_grid_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (auto v = take("stabilizer.z_lower")) c.stabilizer.z_lower = parse_double(*v, "stabilizer.z_lower");
  if (auto v = take("stabilizer.z_upper")) c.stabilizer.z_upper = parse_double(*v, "stabilizer.z_upper");
  if (auto v = take("stabilizer.embedding_constant"))
    c.stabilizer.embedding_constant = parse_double(*v, "stabilizer.embedding_constant");
  if (auto v = take("stabilizer.scale")) c.stabilizer.scale = parse_double(*v, "stabilizer.scale");
  if (auto v = take("stabilizer.M")) c.stabilizer.M = parse_double(*v, "stabilizer.M");
  if (auto v = take("stabilizer.true_param_norm_bound")) {
    c.stabilizer.true_param_norm_bound = parse_double(*v, "stabilizer.true_param_norm_bound");
    c.stabilizer_bound_set = true;
  }
  if (auto v = take("scheme.uniform_time_index"))
    c.uniform_time_index = parse_bool(*v, "scheme.uniform_time_index");
  if (auto v = take("output.snapshots")) c.snapshot_times = parse_double_list(*v, "output.snapshots");
  if (auto v = take("output.dir")) {
    std::filesystem::path p(*v);
    c.output_dir = p;
  }
  if (auto v = take("discrepancy.threshold"))
    c.discrepancy_threshold = parse_double(*v, "discrepancy.threshold");

  if (!entries.empty()) {
    const auto& [key, val] = *entries.begin();
    throw InputError(key + ": unknown key (line " + std::to_string(val.second) + ")");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace mras

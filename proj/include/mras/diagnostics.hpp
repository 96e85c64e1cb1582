#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mras/fem.hpp"

namespace mras {

struct ErrorSample {
  double t = 0.0;
  double eq = 0.0;  // parameter error, L2
  double eu = 0.0;  // state error, L2
  double energy() const { return eu * eu + eq * eq; }
};

/// Per-step error history of a run.
struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> eq_norms;
  std::vector<double> eu_norms;
  std::vector<double> energy;

  void push(const ErrorSample& s);
  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Errors of (q, u) against the truth on the reconstruction mesh.
ErrorSample record(const CellField& q_true, const NodalField& u_true, const CellField& q,
                   const NodalField& u, double t);

struct DecayFit {
  double rate = 0.0;      // C' in energy ~ exp(-C' t)
  double residual = 0.0;  // RMS of the log-fit residual
  std::size_t samples = 0;
};

/// Least-squares fit of log(energy/energy_0) against t over the first half
/// of the time axis. Samples with nonpositive energy are skipped.
DecayFit fit_decay(const ErrorSeries& series);

struct MonotonicityStats {
  std::size_t violations = 0;
  double worst_uptick = 0.0;  // max relative increase energy_{n+1}/energy_n - 1
};

MonotonicityStats check_monotone(const ErrorSeries& series, double slack = 1e-6);

struct RunReport {
  std::vector<std::pair<std::string, std::string>> config;
  double final_eq = 0.0;
  double final_eu = 0.0;
  double initial_eq = 0.0;
  double initial_eu = 0.0;
  MonotonicityStats monotonicity;
  DecayFit decay;
  std::optional<std::size_t> discrepancy_step;
  double wall_seconds = 0.0;
};

RunReport make_report(const ErrorSeries& series, double slack = 1e-6);

void export_csv(const ErrorSeries& series, const std::filesystem::path& path);
ErrorSeries read_csv(const std::filesystem::path& path);

struct NamedNodal {
  std::string name;
  const NodalField* field;
};
struct NamedCell {
  std::string name;
  const CellField* field;
};

void export_vtk(const Mesh& mesh, const std::vector<NamedNodal>& point_data,
                const std::vector<NamedCell>& cell_data, const std::filesystem::path& path,
                const std::string& title = "mras");

void export_report(const RunReport& report, const std::filesystem::path& path);

/// Formats with 17 significant digits, the precision used by all writers.
std::string format_double(double v);

}  // namespace mras

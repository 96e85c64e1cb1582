#include "mras/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mras/error.hpp"

namespace mras {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void ErrorSeries::push(const ErrorSample& s) {
  times.push_back(s.t);
  eq_norms.push_back(s.eq);
  eu_norms.push_back(s.eu);
  energy.push_back(s.energy());
}

ErrorSample record(const CellField& q_true, const NodalField& u_true, const CellField& q,
                   const NodalField& u, double t) {
  return {t, l2_norm(q - q_true), l2_norm(u - u_true)};
}

DecayFit fit_decay(const ErrorSeries& series) {
  DecayFit fit;
  if (series.empty() || !(series.energy.front() > 0.0)) return fit;
  const double t0 = series.times.front();
  const double t_half = t0 + 0.5 * (series.times.back() - t0);
  const double e0 = series.energy.front();

  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.times[i] > t_half) break;
    if (!(series.energy[i] > 0.0)) continue;
    ts.push_back(series.times[i]);
    ys.push_back(std::log(series.energy[i] / e0));
  }
  fit.samples = ts.size();
  if (ts.size() < 2) return fit;

  const double n = static_cast<double>(ts.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
  }
  if (stt == 0.0) return fit;
  const double slope = sty / stt;
  const double intercept = my - slope * mt;
  double rss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ys[i] - (intercept + slope * ts[i]);
    rss += r * r;
  }
  fit.rate = -slope;
  fit.residual = std::sqrt(rss / n);
  return fit;
}

MonotonicityStats check_monotone(const ErrorSeries& series, double slack) {
  MonotonicityStats s;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double prev = series.energy[i - 1];
    const double cur = series.energy[i];
    const double uptick = prev > 0.0 ? cur / prev - 1.0 : (cur > 0.0 ? INFINITY : 0.0);
    s.worst_uptick = std::max(s.worst_uptick, uptick);
    if (cur > prev * (1.0 + slack)) ++s.violations;
  }
  return s;
}

RunReport make_report(const ErrorSeries& series, double slack) {
  RunReport r;
  if (!series.empty()) {
    r.initial_eq = series.eq_norms.front();
    r.initial_eu = series.eu_norms.front();
    r.final_eq = series.eq_norms.back();
    r.final_eu = series.eu_norms.back();
  }
  r.monotonicity = check_monotone(series, slack);
  r.decay = fit_decay(series);
  return r;
}

void export_csv(const ErrorSeries& series, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "t,eq,eu,energy\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_double(series.times[i]) << ',' << format_double(series.eq_norms[i]) << ','
        << format_double(series.eu_norms[i]) << ',' << format_double(series.energy[i]) << '\n';
  }
  finish(out, path);
}

ErrorSeries read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,eq,eu,energy")
    throw DataError(path.string() + ": missing or unexpected CSV header");
  ErrorSeries s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v[4];
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
      const auto end = k < 3 ? line.find(',', pos) : line.size();
      if (end == std::string::npos)
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
      const auto res = std::from_chars(line.data() + pos, line.data() + end, v[k]);
      if (res.ec != std::errc() || res.ptr != line.data() + end)
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad number");
      pos = end + 1;
    }
    s.times.push_back(v[0]);
    s.eq_norms.push_back(v[1]);
    s.eu_norms.push_back(v[2]);
    s.energy.push_back(v[3]);
  }
  return s;
}

void export_vtk(const Mesh& mesh, const std::vector<NamedNodal>& point_data,
                const std::vector<NamedCell>& cell_data, const std::filesystem::path& path,
                const std::string& title) {
  for (const auto& f : point_data) require_same_mesh(mesh, f.field->mesh(), "export_vtk");
  for (const auto& f : cell_data) require_same_mesh(mesh, f.field->mesh(), "export_vtk");

  auto out = open_for_write(path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices())
    out << format_double(p.x) << ' ' << format_double(p.y) << " 0\n";
  const auto nt = mesh.num_triangles();
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t e = 0; e < nt; ++e) out << "5\n";

  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& f : point_data) {
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.field->values()) out << format_double(v) << '\n';
    }
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << nt << '\n';
    for (const auto& f : cell_data) {
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.field->values()) out << format_double(v) << '\n';
    }
  }
  finish(out, path);
}

void export_report(const RunReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& [k, v] : report.config) out << "config." << k << " = " << v << '\n';
  out << "initial_eq = " << format_double(report.initial_eq) << '\n';
  out << "initial_eu = " << format_double(report.initial_eu) << '\n';
  out << "final_eq = " << format_double(report.final_eq) << '\n';
  out << "final_eu = " << format_double(report.final_eu) << '\n';
  out << "monotonicity_violations = " << report.monotonicity.violations << '\n';
  out << "worst_relative_uptick = " << format_double(report.monotonicity.worst_uptick) << '\n';
  out << "decay_rate = " << format_double(report.decay.rate) << '\n';
  out << "decay_fit_residual = " << format_double(report.decay.residual) << '\n';
  out << "discrepancy_step = "
      << (report.discrepancy_step ? std::to_string(*report.discrepancy_step) : "none") << '\n';
  out << "wall_seconds = " << format_double(report.wall_seconds) << '\n';
  finish(out, path);
}

}  // namespace mras

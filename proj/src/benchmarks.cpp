#include "mras/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "mras/error.hpp"
#include "mras/random.hpp"

namespace mras {

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::darcy: return "darcy";
    case ProblemKind::fisher_kpp: return "fisher_kpp";
    case ProblemKind::nonlinear_potential: return "nonlinear_potential";
    case ProblemKind::allen_cahn: return "allen_cahn";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "darcy") return ProblemKind::darcy;
  if (name == "fisher_kpp" || name == "fisher") return ProblemKind::fisher_kpp;
  if (name == "nonlinear_potential" || name == "potential")
    return ProblemKind::nonlinear_potential;
  if (name == "allen_cahn") return ProblemKind::allen_cahn;
  throw InputError("unknown benchmark kind '" + std::string(name) + "'");
}

int reaction_power(ProblemKind kind) { return kind == ProblemKind::allen_cahn ? 3 : 1; }

namespace {
bool is_potential_family(ProblemKind k) {
  return k == ProblemKind::nonlinear_potential || k == ProblemKind::allen_cahn;
}
double two_thirds_pow(double x) { return std::cbrt(x * x); }  // |x|^{2/3}
}  // namespace

ProblemSpec ProblemSpec::defaults(ProblemKind kind, const Mesh& mesh) {
  ProblemSpec s;
  s.kind = kind;
  s.sigma = is_potential_family(kind) ? 1 : 0;
  s.c_tilde = CellField(mesh, 0.0);
  s.boundary = is_potential_family(kind) ? BoundaryMode::data_dirichlet
                                         : BoundaryMode::homogeneous_dirichlet;
  return s;
}

void ProblemSpec::validate() const {
  const bool nl = is_potential_family(kind);
  if (sigma != (nl ? 1 : 0))
    throw InputError("sigma must be " + std::string(nl ? "1" : "0") + " for " + to_string(kind));
  if (nl && boundary != BoundaryMode::data_dirichlet)
    throw InputError(to_string(kind) + " requires data Dirichlet boundary values");
  if (!nl && boundary != BoundaryMode::homogeneous_dirichlet)
    throw InputError(to_string(kind) + " requires homogeneous Dirichlet boundary values");
  if (nl && (!c_tilde.has_mesh() || !c_tilde.all_finite()))
    throw InputError("linearization point must be a finite cell field");
}

StabilizerConfig StabilizerConfig::defaults(ProblemKind kind) {
  StabilizerConfig c;
  if (kind == ProblemKind::allen_cahn) {
    c.z_lower = 0.05;
    c.z_upper = 1.5;
  }
  return c;
}

void StabilizerConfig::validate() const {
  if (!(z_lower > 0.0)) throw InputError("stabilizer.z_lower must be positive");
  if (!(z_upper >= z_lower)) throw InputError("stabilizer.z_upper must be >= stabilizer.z_lower");
  if (!(M > 0.0)) throw InputError("stabilizer.M must be positive");
  if (!(scale >= 1.0)) throw InputError("stabilizer.scale must be >= 1");
  if (!(embedding_constant > 0.0)) throw InputError("stabilizer.embedding_constant must be positive");
  if (!(true_param_norm_bound >= 0.0))
    throw InputError("stabilizer.true_param_norm_bound must be nonnegative");
}

double lipschitz_constant(double c_norm, double c_true_norm, double c_tilde_norm,
                          const StabilizerConfig& cfg) {
  return 5.0 / 3.0 * cfg.z_upper * cfg.embedding_constant *
         (two_thirds_pow(c_norm) + two_thirds_pow(c_true_norm) + two_thirds_pow(c_tilde_norm));
}

double stabilizer_constant(double c_norm, double c_tilde_norm, const StabilizerConfig& cfg) {
  const double L = lipschitz_constant(c_norm, cfg.true_param_norm_bound, c_tilde_norm, cfg);
  return cfg.scale * (L * L / (2.0 * cfg.z_lower) + cfg.M);
}

double stabilizer_constant(const CellField& c_n, const StabilizerConfig& cfg,
                           const CellField& c_tilde) {
  return stabilizer_constant(l2_norm(c_n), l2_norm(c_tilde), cfg);
}

// ---------------------------------------------------------------------------
// Diffusion problems

CellField darcy_q_update(const CellField& a_n, const NodalField& u_n, const NodalField& z_n,
                         double dt) {
  require_same_mesh(a_n.mesh(), u_n.mesh(), "darcy_q_update");
  const CellField increment = elementwise_gradient_dot(z_n, u_n - z_n);
  return a_n + dt * increment;
}

CellField fisher_q_update(const CellField& a_n, const NodalField& u_n, const NodalField& z_n,
                          double dt) {
  return darcy_q_update(a_n, u_n, z_n, dt);
}

namespace {

struct DiffusionOperators {
  CsrMatrix mass;
  CsrMatrix stiffness;
  explicit DiffusionOperators(const Mesh& m) : mass(assemble_mass(m)), stiffness(assemble_stiffness(m)) {}
};

// (M + dt K) u = M u_n + dt load + dt K z - dt G(a) z, u = 0 on the boundary.
NodalField diffusion_u_solve(const DiffusionOperators& ops, const CellField& a_next,
                             const NodalField& u_n, const NodalField& z_np1,
                             std::span<const double> load, double dt,
                             const SolveOptions& options) {
  const Mesh& mesh = u_n.mesh();
  require_same_mesh(mesh, a_next.mesh(), "state solve");
  require_same_mesh(mesh, z_np1.mesh(), "state solve");
  const std::size_t nv = mesh.num_vertices();

  const CsrMatrix system = add(1.0, ops.mass, dt, ops.stiffness);
  auto rhs = ops.mass.multiply(u_n.values());
  const auto kz = ops.stiffness.multiply(z_np1.values());
  const auto gaz = grad_coupling(mesh, z_np1).multiply(a_next.values());
  for (std::size_t i = 0; i < nv; ++i) rhs[i] += dt * (load[i] + kz[i] - gaz[i]);

  const std::vector<double> zero(nv, 0.0);
  auto u = solve_with_dirichlet(mesh, system, rhs, zero, u_n.values(), options);
  return NodalField(mesh, std::move(u));
}

std::vector<double> fisher_load(const NodalField& z, const NodalField& g) {
  const Mesh& mesh = z.mesh();
  require_same_mesh(mesh, g.mesh(), "fisher_u_system");
  const auto zv = z.values();
  const auto gv = g.values();
  return integrate_against_basis(mesh, [&](std::size_t e, const std::array<double, 3>& b) {
    const auto& t = mesh.triangle(e);
    const double zq = interpolate(zv, t, b);
    return interpolate(gv, t, b) - zq + zq * zq;
  });
}

}  // namespace

NodalField darcy_u_system(const CellField& a_next, const NodalField& u_n,
                          const NodalField& z_np1, const NodalField& g_np1, double dt,
                          const SolveOptions& options) {
  const DiffusionOperators ops(u_n.mesh());
  const auto load = ops.mass.multiply(g_np1.values());
  return diffusion_u_solve(ops, a_next, u_n, z_np1, load, dt, options);
}

NodalField fisher_u_system(const CellField& a_next, const NodalField& u_n,
                           const NodalField& z_np1, const NodalField& g_np1, double dt,
                           const SolveOptions& options) {
  const DiffusionOperators ops(u_n.mesh());
  const auto load = fisher_load(z_np1, g_np1);
  return diffusion_u_solve(ops, a_next, u_n, z_np1, load, dt, options);
}

// ---------------------------------------------------------------------------
// Potential family

namespace {

CellField potential_family_q_update(const CellField& c_n, const PotentialStepData& d, double dt,
                                    const ProblemSpec& spec, int power) {
  const Mesh& mesh = c_n.mesh();
  for (const NodalField* f : {&d.u_n, &d.z_n, &d.z_np1, &d.dz_dt, &d.g_np1})
    require_same_mesh(mesh, f->mesh(), "potential_q_update");
  require_same_mesh(mesh, spec.c_tilde.mesh(), "potential_q_update");

  const double sigma = spec.sigma;
  const NodalField& z_mixed = spec.uniform_time_index ? d.z_np1 : d.z_n;
  const auto zn = d.z_n.values();
  const auto zn1 = d.z_np1.values();
  const auto zm = z_mixed.values();
  const auto un = d.u_n.values();
  const auto dz = d.dz_dt.values();
  const auto g = d.g_np1.values();

  const auto int_zp = integrate_per_element(mesh, [&](std::size_t e, const auto& b) {
    return std::pow(interpolate(zn1, mesh.triangle(e), b), power);
  });
  const auto int_zm = integrate_per_element(mesh, [&](std::size_t e, const auto& b) {
    return interpolate(zm, mesh.triangle(e), b);
  });
  const auto int_adj = integrate_per_element(mesh, [&](std::size_t e, const auto& b) {
    const auto& t = mesh.triangle(e);
    const double z = interpolate(zn, t, b);
    return z * (interpolate(un, t, b) - z);
  });
  const auto int_dz_g = integrate_per_element(mesh, [&](std::size_t e, const auto& b) {
    const auto& t = mesh.triangle(e);
    return interpolate(dz, t, b) - interpolate(g, t, b);
  });
  const CellField flux = boundary_flux_form(d.z_np1);

  CellField next(mesh);
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const double c = c_n[e];
    const double kappa = two_thirds_pow(c);
    const double diag = mesh.area(e) + sigma * dt * (int_zp[e] + kappa * int_zm[e]);
    if (!(diag > 0.0))
      throw DataError("positivity violation: parameter update factor " + std::to_string(diag) +
                      " on element " + std::to_string(e));
    const double adjoint = 1.0 + 5.0 / 3.0 * two_thirds_pow(spec.c_tilde[e]);
    const double residual = int_dz_g[e] + c * int_zp[e] + kappa * c * int_zm[e];
    const double rhs = dt * adjoint * int_adj[e] + sigma * dt * flux[e] - sigma * dt * residual;
    next[e] = c + rhs / diag;
  }
  return next;
}

NodalField potential_family_u_solve(const CsrMatrix& mass, const CsrMatrix& stiffness,
                                    const CellField& c_n, const CellField& c_next,
                                    const PotentialStepData& d, double dt,
                                    const StabilizerConfig& cfg, const ProblemSpec& spec,
                                    int power, const SolveOptions& options) {
  const Mesh& mesh = c_n.mesh();
  for (const NodalField* f : {&d.u_n, &d.z_n, &d.z_np1, &d.g_np1})
    require_same_mesh(mesh, f->mesh(), "potential_u_system");
  require_same_mesh(mesh, c_next.mesh(), "potential_u_system");
  const std::size_t nv = mesh.num_vertices();

  const double C = stabilizer_constant(c_n, cfg, spec.c_tilde);
  const auto zn1 = d.z_np1.values();
  const auto g = d.g_np1.values();

  // (c_{n+1} - c_n)(z^p + k z) + c_n (z^p + k z) - g  =  c_{n+1}(z^p + k z) - g, k = |c_n|^{2/3}
  const auto load = integrate_against_basis(mesh, [&](std::size_t e, const auto& b) {
    const auto& t = mesh.triangle(e);
    const double z = interpolate(zn1, t, b);
    const double kappa = two_thirds_pow(c_n[e]);
    return c_next[e] * (std::pow(z, power) + kappa * z) - interpolate(g, t, b);
  });

  const NodalField& z_ref = spec.uniform_time_index ? d.z_np1 : d.z_n;
  const auto kz = stiffness.multiply(zn1);
  const auto kdiff = stiffness.multiply((z_ref - d.u_n).values());
  std::vector<double> rhs(nv);
  for (std::size_t i = 0; i < nv; ++i) rhs[i] = -dt * load[i] - dt * kz[i] + dt * C * kdiff[i];

  const CsrMatrix system = add(1.0, mass, dt * C, stiffness);
  std::vector<double> boundary(nv, 0.0);
  const auto& flags = mesh.boundary_vertex_flags();
  for (std::size_t i = 0; i < nv; ++i)
    if (flags[i]) boundary[i] = d.z_np1[i] - d.u_n[i];
  const std::vector<double> guess(nv, 0.0);
  const auto du = solve_with_dirichlet(mesh, system, rhs, boundary, guess, options);

  std::vector<double> u(d.u_n.values().begin(), d.u_n.values().end());
  for (std::size_t i = 0; i < nv; ++i) u[i] += du[i];
  return NodalField(mesh, std::move(u));
}

}  // namespace

CellField potential_q_update(const CellField& c_n, const PotentialStepData& data, double dt,
                             const ProblemSpec& spec) {
  return potential_family_q_update(c_n, data, dt, spec, 1);
}

CellField allen_cahn_q_update(const CellField& c_n, const PotentialStepData& data, double dt,
                              const ProblemSpec& spec) {
  return potential_family_q_update(c_n, data, dt, spec, 3);
}

NodalField potential_u_system(const CellField& c_n, const CellField& c_next,
                              const PotentialStepData& data, double dt,
                              const StabilizerConfig& cfg, const ProblemSpec& spec,
                              const SolveOptions& options) {
  const Mesh& mesh = c_n.mesh();
  return potential_family_u_solve(assemble_mass(mesh), assemble_stiffness(mesh), c_n, c_next,
                                  data, dt, cfg, spec, 1, options);
}

NodalField allen_cahn_u_system(const CellField& c_n, const CellField& c_next,
                               const PotentialStepData& data, double dt,
                               const StabilizerConfig& cfg, const ProblemSpec& spec,
                               const SolveOptions& options) {
  const Mesh& mesh = c_n.mesh();
  return potential_family_u_solve(assemble_mass(mesh), assemble_stiffness(mesh), c_n, c_next,
                                  data, dt, cfg, spec, 3, options);
}

// ---------------------------------------------------------------------------
// Checks

namespace {
double phi(double c) { return c * two_thirds_pow(c); }  // c |c|^{2/3}
}  // namespace

CoercivityReport coercivity_check(const NodalField& z, const CellField& c_true,
                                  std::size_t n_samples, std::uint64_t seed, double z_lower,
                                  int power) {
  const Mesh& mesh = z.mesh();
  require_same_mesh(mesh, c_true.mesh(), "coercivity_check");
  if (!(z_lower > 0.0)) throw InputError("coercivity_check: z_lower must be positive");
  const auto zv = z.values();
  const auto int_zp = integrate_per_element(mesh, [&](std::size_t e, const auto& b) {
    return std::pow(interpolate(zv, mesh.triangle(e), b), power);
  });
  const auto int_z = integrate_per_element(mesh, [&](std::size_t e, const auto& b) {
    return interpolate(zv, mesh.triangle(e), b);
  });

  CoercivityReport report;
  report.min_ratio = INFINITY;
  const std::size_t nt = mesh.num_triangles();
  for (std::size_t s = 0; s < n_samples; ++s) {
    double lhs = 0.0, norm2 = 0.0;
    for (std::size_t e = 0; e < nt; ++e) {
      const double c = -5.0 + 10.0 * rng::uniform(seed, s, e);
      const double d = c - c_true[e];
      lhs += d * d * int_zp[e] + (phi(c) - phi(c_true[e])) * d * int_z[e];
      norm2 += mesh.area(e) * d * d;
    }
    ++report.samples;
    const double rhs = z_lower * norm2;
    if (lhs < rhs - 1e-10) ++report.failures;
    if (rhs > 0.0) report.min_ratio = std::min(report.min_ratio, lhs / rhs);
  }
  return report;
}

LipschitzReport lipschitz_check(const NodalField& z, const CellField& c, const CellField& c_true,
                                const CellField& c_tilde, const StabilizerConfig& cfg,
                                std::size_t n_test_functions, std::uint64_t seed) {
  const Mesh& mesh = z.mesh();
  require_same_mesh(mesh, c.mesh(), "lipschitz_check");
  require_same_mesh(mesh, c_true.mesh(), "lipschitz_check");
  require_same_mesh(mesh, c_tilde.mesh(), "lipschitz_check");
  const auto zv = z.values();

  // r = f(c) - f(c_true) - f'(c_tilde)(c - c_true) = z [phi(c) - phi(c_true) - 5/3 |c_tilde|^{2/3} (c - c_true)]
  const auto b = integrate_against_basis(mesh, [&](std::size_t e, const auto& bary) {
    const double d = c[e] - c_true[e];
    const double r = phi(c[e]) - phi(c_true[e]) - 5.0 / 3.0 * two_thirds_pow(c_tilde[e]) * d;
    return interpolate(zv, mesh.triangle(e), bary) * r;
  });

  // H^1 norm |v|^2 = |grad v|^2 + |v|^2_{boundary}
  const CsrMatrix gram = add(1.0, assemble_stiffness(mesh), 1.0, assemble_boundary_mass(mesh));
  SolveOptions opts;
  opts.tol = 1e-12;
  const auto sol = cg_solve(gram, b, std::vector<double>(b.size(), 0.0), opts);
  if (!sol.report.converged) throw SolverError("lipschitz_check: Gram solve did not converge");

  LipschitzReport report;
  report.dual_norm = std::sqrt(std::max(0.0, dot(b, sol.x)));
  for (std::size_t k = 0; k < n_test_functions; ++k) {
    std::vector<double> v(b.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng::normal(seed, k, i);
    const double vnorm = std::sqrt(dot(v, gram.multiply(v)));
    if (vnorm > 0.0) report.sampled_norm = std::max(report.sampled_norm, std::abs(dot(b, v)) / vnorm);
  }
  const double L = lipschitz_constant(l2_norm(c), l2_norm(c_true), l2_norm(c_tilde), cfg);
  report.bound = L * l2_norm(c - c_true);
  return report;
}

// ---------------------------------------------------------------------------
// Stepper adapters

namespace {

class DiffusionProblem final : public Problem {
 public:
  DiffusionProblem(const Mesh& mesh, ProblemKind kind, SolveOptions options)
      : ops_(mesh), kind_(kind), options_(options) {}

  std::string name() const override { return to_string(kind_); }

  CellField update_parameter(const MrasState& s, const StepInputs& in, double dt) const override {
    return darcy_q_update(s.q, s.u, in.z_n, dt);
  }

  NodalField solve_state(const MrasState& s, const CellField& q_next, const StepInputs& in,
                         double dt) const override {
    if (kind_ == ProblemKind::fisher_kpp) {
      const auto load = fisher_load(in.z_np1, in.g_np1);
      return diffusion_u_solve(ops_, q_next, s.u, in.z_np1, load, dt, options_);
    }
    const auto load = ops_.mass.multiply(in.g_np1.values());
    return diffusion_u_solve(ops_, q_next, s.u, in.z_np1, load, dt, options_);
  }

 private:
  DiffusionOperators ops_;
  ProblemKind kind_;
  SolveOptions options_;
};

class PotentialProblem final : public Problem {
 public:
  PotentialProblem(const Mesh& mesh, ProblemSpec spec, StabilizerConfig cfg,
                   SolveOptions options)
      : ops_(mesh),
        spec_(std::move(spec)),
        cfg_(cfg),
        options_(options),
        power_(reaction_power(spec_.kind)) {}

  std::string name() const override { return to_string(spec_.kind); }

  CellField update_parameter(const MrasState& s, const StepInputs& in, double dt) const override {
    return potential_family_q_update(s.q, {s.u, in.z_n, in.z_np1, in.dz_dt, in.g_np1}, dt, spec_,
                                     power_);
  }

  NodalField solve_state(const MrasState& s, const CellField& q_next, const StepInputs& in,
                         double dt) const override {
    return potential_family_u_solve(ops_.mass, ops_.stiffness, s.q, q_next,
                                    {s.u, in.z_n, in.z_np1, in.dz_dt, in.g_np1}, dt, cfg_, spec_,
                                    power_, options_);
  }

 private:
  DiffusionOperators ops_;
  ProblemSpec spec_;
  StabilizerConfig cfg_;
  SolveOptions options_;
  int power_;
};

}  // namespace

std::unique_ptr<Problem> make_problem(const Mesh& mesh, const ProblemSpec& spec,
                                      const StabilizerConfig& cfg, const SolveOptions& options) {
  spec.validate();
  if (is_potential_family(spec.kind)) {
    cfg.validate();
    require_same_mesh(mesh, spec.c_tilde.mesh(), "make_problem");
    return std::make_unique<PotentialProblem>(mesh, spec, cfg, options);
  }
  return std::make_unique<DiffusionProblem>(mesh, spec.kind, options);
}

}  // namespace mras

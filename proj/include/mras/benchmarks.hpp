#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "mras/core.hpp"
#include "mras/fem.hpp"
#include "mras/sparse.hpp"

namespace mras {

enum class ProblemKind { darcy, fisher_kpp, nonlinear_potential, allen_cahn };

std::string to_string(ProblemKind kind);
/// Throws InputError for unknown names.
ProblemKind parse_problem_kind(std::string_view name);
/// Exponent of the state in the reaction term c * z^p (potential 1, Allen-Cahn 3).
int reaction_power(ProblemKind kind);

enum class BoundaryMode { homogeneous_dirichlet, data_dirichlet };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::darcy;
  int sigma = 0;
  CellField c_tilde;  // linearization point, potential/Allen-Cahn only
  BoundaryMode boundary = BoundaryMode::homogeneous_dirichlet;
  /// Use z_{n+1} wherever the printed scheme mixes in z_n (sensitivity switch).
  bool uniform_time_index = false;

  static ProblemSpec defaults(ProblemKind kind, const Mesh& mesh);
  void validate() const;
};

struct StabilizerConfig {
  double z_lower = 1.0;
  double z_upper = 1.5;
  double embedding_constant = 1.0;
  double true_param_norm_bound = 0.0;
  double scale = 1.44;  // 4 (3/5)^2
  double M = 1.0 / 1.44;

  static StabilizerConfig defaults(ProblemKind kind);
  void validate() const;
};

/// L(|c|) = 5/3 z_upper C_emb (|c|^{2/3} + |c_true|^{2/3} + |c_tilde|^{2/3}).
double lipschitz_constant(double c_norm, double c_true_norm, double c_tilde_norm,
                          const StabilizerConfig& cfg);
/// scale * (L^2 / (2 z_lower) + M), with the a-priori bound standing in for |c_true|.
double stabilizer_constant(double c_norm, double c_tilde_norm, const StabilizerConfig& cfg);
double stabilizer_constant(const CellField& c_n, const StabilizerConfig& cfg,
                           const CellField& c_tilde);

// ---------------------------------------------------------------------------
// Diffusion identification (sigma = 0, homogeneous Dirichlet)

CellField darcy_q_update(const CellField& a_n, const NodalField& u_n, const NodalField& z_n,
                         double dt);
NodalField darcy_u_system(const CellField& a_next, const NodalField& u_n,
                          const NodalField& z_np1, const NodalField& g_np1, double dt,
                          const SolveOptions& options = {});

CellField fisher_q_update(const CellField& a_n, const NodalField& u_n, const NodalField& z_n,
                          double dt);
NodalField fisher_u_system(const CellField& a_next, const NodalField& u_n,
                           const NodalField& z_np1, const NodalField& g_np1, double dt,
                           const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Potential identification (sigma = 1, data on the boundary)

struct PotentialStepData {
  const NodalField& u_n;
  const NodalField& z_n;
  const NodalField& z_np1;
  const NodalField& dz_dt;
  const NodalField& g_np1;
};

/// Elementwise incremental update. Throws DataError when an element's
/// diagonal factor is not positive.
CellField potential_q_update(const CellField& c_n, const PotentialStepData& data, double dt,
                             const ProblemSpec& spec);
NodalField potential_u_system(const CellField& c_n, const CellField& c_next,
                              const PotentialStepData& data, double dt,
                              const StabilizerConfig& cfg, const ProblemSpec& spec,
                              const SolveOptions& options = {});

CellField allen_cahn_q_update(const CellField& c_n, const PotentialStepData& data, double dt,
                              const ProblemSpec& spec);
NodalField allen_cahn_u_system(const CellField& c_n, const CellField& c_next,
                               const PotentialStepData& data, double dt,
                               const StabilizerConfig& cfg, const ProblemSpec& spec,
                               const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Structural checks on the potential model f(c, z) = -lap z + c z^p + |c|^{2/3} c z

struct CoercivityReport {
  std::size_t samples = 0;
  std::size_t failures = 0;
  double min_ratio = 0.0;  // <f(c)-f(c_true), c-c_true> / (z_lower |c-c_true|^2)
};

/// Random c uniform in [-5, 5] per element.
CoercivityReport coercivity_check(const NodalField& z, const CellField& c_true,
                                  std::size_t n_samples, std::uint64_t seed, double z_lower,
                                  int power = 1);

struct LipschitzReport {
  double dual_norm = 0.0;     // exact discrete H^1 dual norm of the linearization residual
  double sampled_norm = 0.0;  // max over random test functions, <= dual_norm
  double bound = 0.0;         // L(|c|) |c - c_true|
  bool holds() const { return dual_norm <= bound; }
};

LipschitzReport lipschitz_check(const NodalField& z, const CellField& c, const CellField& c_true,
                                const CellField& c_tilde, const StabilizerConfig& cfg,
                                std::size_t n_test_functions, std::uint64_t seed);

// ---------------------------------------------------------------------------

/// Problem adapter for the stepper. The mesh must outlive the problem.
std::unique_ptr<Problem> make_problem(const Mesh& mesh, const ProblemSpec& spec,
                                      const StabilizerConfig& cfg,
                                      const SolveOptions& options = {});

}  // namespace mras

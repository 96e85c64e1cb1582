#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mras/benchmarks.hpp"
#include "mras/core.hpp"
#include "mras/error.hpp"
#include "oracle/dense_fem.hpp"
#include "support.hpp"

using namespace mras;
using testing_support::jittered_square;
using testing_support::max_abs_diff;
using testing_support::random_vector;

namespace {

NodalField zero_on_boundary(const Mesh& m, std::vector<double> v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m.is_boundary_vertex(i)) v[i] = 0.0;
  return NodalField(m, std::move(v));
}

SolveOptions tight() {
  SolveOptions o;
  o.tol = 1e-14;
  return o;
}

// g with M g = K_a z
NodalField compatible_source(const Mesh& m, const CellField& a, const NodalField& z) {
  const oracle::Vec g =
      oracle::mass(m).ldlt().solve(oracle::stiffness(m, a.values()) * oracle::vec(z.values()));
  return NodalField(m, std::vector<double>(g.data(), g.data() + g.size()));
}

// Records the order of calls and what each stage saw.
class SpyProblem : public Problem {
 public:
  mutable std::vector<std::string> calls;
  mutable std::vector<double> seen_q_next;
  bool fail_state = false;
  bool produce_nan = false;

  std::string name() const override { return "spy"; }
  CellField update_parameter(const MrasState& s, const StepInputs& in, double dt) const override {
    calls.push_back("q");
    CellField q = s.q;
    for (std::size_t e = 0; e < q.size(); ++e) q[e] += dt * in.z_np1[0];
    return q;
  }
  NodalField solve_state(const MrasState& s, const CellField& q_next, const StepInputs& in,
                         double) const override {
    calls.push_back("u");
    seen_q_next.assign(q_next.values().begin(), q_next.values().end());
    if (fail_state) throw SolverError("no convergence");
    NodalField u = in.z_np1;
    if (produce_nan) u[0] = std::numeric_limits<double>::quiet_NaN();
    (void)s;
    return u;
  }
};

ObservationSeries constant_series(const Mesh& m, const NodalField& z, const NodalField& g,
                                  double dt, std::size_t n) {
  ObservationSeries obs;
  obs.grid = TimeGrid(dt, n);
  obs.snapshots.assign(n + 1, z);
  obs.sources.assign(n + 1, g);
  (void)m;
  return obs;
}

}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g = TimeGrid::from_final_time(0.01, 10.0);
  CHECK(g.n_steps == 1000);
  CHECK(g.final_time() == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(g.time(3) == doctest::Approx(0.03).epsilon(1e-14));
  CHECK(TimeGrid::from_final_time(0.001, 5.0).n_steps == 5000);
  CHECK_THROWS_AS(TimeGrid(0.0, 3), InputError);
  CHECK_THROWS_AS(TimeGrid(-0.1, 3), InputError);
  CHECK_THROWS_AS(TimeGrid(std::numeric_limits<double>::infinity(), 3), InputError);
  CHECK_THROWS_AS(TimeGrid::from_final_time(0.3, 1.0), InputError);
  CHECK_THROWS_AS(TimeGrid::from_final_time(0.1, -1.0), InputError);
}

TEST_CASE("backward difference and step inputs") {
  const Mesh m = jittered_square(3);
  const NodalField a(m, random_vector(m.num_vertices(), 1));
  const NodalField b(m, random_vector(m.num_vertices(), 2));
  const NodalField d = backward_difference(a, b, 0.25);
  for (std::size_t i = 0; i < m.num_vertices(); ++i)
    CHECK(d[i] == doctest::Approx(4.0 * (b[i] - a[i])).epsilon(1e-14));

  ObservationSeries obs;
  obs.grid = TimeGrid(0.25, 2);
  for (unsigned k = 0; k < 3; ++k) {
    obs.snapshots.emplace_back(m, random_vector(m.num_vertices(), 10 + k));
    obs.sources.emplace_back(m, random_vector(m.num_vertices(), 20 + k));
  }
  const StepInputs in = step_inputs(obs, 1);
  CHECK(max_abs_diff(in.z_n.values(), obs.snapshots[1].values()) == 0.0);
  CHECK(max_abs_diff(in.z_np1.values(), obs.snapshots[2].values()) == 0.0);
  CHECK(max_abs_diff(in.g_np1.values(), obs.sources[2].values()) == 0.0);
  const NodalField ref = backward_difference(obs.snapshots[1], obs.snapshots[2], 0.25);
  CHECK(max_abs_diff(in.dz_dt.values(), ref.values()) == 0.0);
  CHECK_THROWS_AS(step_inputs(obs, 2), InputError);
}

TEST_CASE("snapshot steps are sorted, unique and inside the window") {
  const TimeGrid g(0.01, 100);
  const auto s = snapshot_steps(g, {0.5, 0.0, 0.05, 0.051, 5.0, -1.0, 1.0});
  CHECK(s == std::vector<std::size_t>{0, 5, 50, 100});
  CHECK(snapshot_steps(g, {}).empty());
}

TEST_CASE("darcy step with u_n = z_n keeps the parameter") {
  const Mesh m = jittered_square(5);
  const auto problem = make_problem(m, ProblemSpec::defaults(ProblemKind::darcy, m), {}, tight());
  const CellField a(m, random_vector(m.num_triangles(), 3, 0.5, 1.5));
  const NodalField z = zero_on_boundary(m, random_vector(m.num_vertices(), 4));
  const NodalField z1(m, random_vector(m.num_vertices(), 5));
  const NodalField g(m, random_vector(m.num_vertices(), 6));
  const MrasState s{a, z, 0};
  const MrasState next = mras_step(*problem, s, {z, z1, g, backward_difference(z, z1, 0.01)},
                                   TimeGrid(0.01, 1));
  CHECK(max_abs_diff(next.q.values(), a.values()) == 0.0);
  CHECK(next.step_index == 1);
}

TEST_CASE("exact data and exact parameter are stationary") {
  const Mesh m = jittered_square(6);
  SUBCASE("darcy") {
    const auto problem = make_problem(m, ProblemSpec::defaults(ProblemKind::darcy, m), {}, tight());
    const CellField a(m, random_vector(m.num_triangles(), 7, 0.5, 1.5));
    const NodalField z = zero_on_boundary(m, random_vector(m.num_vertices(), 8));
    const NodalField g = compatible_source(m, a, z);
    const MrasState s{a, z, 4};
    const MrasState next = mras_step(*problem, s, {z, z, g, NodalField(m, 0.0)}, TimeGrid(0.01, 10));
    CHECK(max_abs_diff(next.q.values(), a.values()) == 0.0);
    CHECK(max_abs_diff(next.u.values(), z.values()) <= 1e-10);
    CHECK(next.step_index == 5);
  }
  SUBCASE("potential and Allen-Cahn with constant data") {
    for (auto kind : {ProblemKind::nonlinear_potential, ProblemKind::allen_cahn}) {
      const int p = reaction_power(kind);
      StabilizerConfig cfg = StabilizerConfig::defaults(kind);
      cfg.true_param_norm_bound = 2.0;
      const auto problem = make_problem(m, ProblemSpec::defaults(kind, m), cfg, tight());
      const double c = 0.9, zv = 1.2;
      const NodalField z(m, zv);
      const NodalField g(m, c * (std::pow(zv, p) + std::cbrt(c * c) * zv));
      const MrasState s{CellField(m, c), z, 0};
      const MrasState next = mras_step(*problem, s, {z, z, g, NodalField(m, 0.0)}, TimeGrid(0.01, 1));
      CHECK(max_abs_diff(next.q.values(), s.q.values()) <= 1e-13);
      CHECK(max_abs_diff(next.u.values(), z.values()) <= 1e-10);
    }
  }
}

TEST_CASE("single steps through the problem adapter match the dense oracle") {
  for (const Mesh& m : {testing_support::two_triangles(), jittered_square(5, 11)}) {
    const CellField q(m, random_vector(m.num_triangles(), 31, 0.5, 2.0));
    const NodalField zn(m, random_vector(m.num_vertices(), 32, 1.0, 1.5));
    const NodalField z1(m, random_vector(m.num_vertices(), 33, 1.0, 1.5));
    const NodalField g(m, random_vector(m.num_vertices(), 34));
    const double dt = 0.01;
    const StepInputs in{zn, z1, g, backward_difference(zn, z1, dt)};
    for (auto kind : {ProblemKind::darcy, ProblemKind::fisher_kpp}) {
      const auto problem = make_problem(m, ProblemSpec::defaults(kind, m), {}, tight());
      const NodalField un = zero_on_boundary(m, random_vector(m.num_vertices(), 35));
      const MrasState next = mras_step(*problem, {q, un, 0}, in, TimeGrid(dt, 1));
      const auto ref = oracle::diffusion_step(m, q.values(), un.values(), zn.values(), z1.values(),
                                              g.values(), dt, kind == ProblemKind::fisher_kpp);
      CHECK(max_abs_diff(next.q.values(), ref.q) <= 1e-12);
      CHECK((oracle::vec(next.u.values()) - ref.u).cwiseAbs().maxCoeff() <= 1e-10);
    }
    for (auto kind : {ProblemKind::nonlinear_potential, ProblemKind::allen_cahn}) {
      StabilizerConfig cfg = StabilizerConfig::defaults(kind);
      cfg.true_param_norm_bound = 3.0;
      const auto problem = make_problem(m, ProblemSpec::defaults(kind, m), cfg, tight());
      const NodalField un(m, random_vector(m.num_vertices(), 36, 1.0, 1.5));
      const MrasState next = mras_step(*problem, {q, un, 0}, in, TimeGrid(dt, 1));
      oracle::PotentialParams prm;
      prm.power = reaction_power(kind);
      prm.embedding = cfg.embedding_constant;
      prm.z_lower = cfg.z_lower;
      prm.z_upper = cfg.z_upper;
      prm.true_norm = 3.0;
      const auto ref = oracle::potential_step(m, q.values(), std::vector<double>(m.num_triangles(), 0.0),
                                              un.values(), zn.values(), z1.values(), g.values(), dt, prm);
      CHECK(max_abs_diff(next.q.values(), ref.q) <= 1e-10);
      CHECK((oracle::vec(next.u.values()) - ref.u).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("parameter solve runs first and never sees the new state") {
  const Mesh m = jittered_square(3);
  SpyProblem spy;
  const NodalField z(m, 2.0);
  const MrasState s{CellField(m, 1.0), NodalField(m, 0.0), 0};
  const MrasState next = mras_step(spy, s, {z, z, z, z}, TimeGrid(0.5, 1));
  CHECK(spy.calls == std::vector<std::string>{"q", "u"});
  // the state solve received the updated parameter
  for (double v : spy.seen_q_next) CHECK(v == 2.0);
  CHECK(max_abs_diff(next.q.values(), spy.seen_q_next) == 0.0);
}

TEST_CASE("solver failures carry the step index") {
  const Mesh m = jittered_square(3);
  SpyProblem spy;
  spy.fail_state = true;
  const NodalField z(m, 1.0);
  const MrasState s{CellField(m, 1.0), NodalField(m, 0.0), 41};
  try {
    mras_step(spy, s, {z, z, z, z}, TimeGrid(0.5, 100));
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    REQUIRE(e.step().has_value());
    CHECK(*e.step() == 42);
  }
  spy.fail_state = false;
  spy.produce_nan = true;
  CHECK_THROWS_AS(mras_step(spy, s, {z, z, z, z}, TimeGrid(0.5, 100)), SolverError);

  const Mesh other = jittered_square(3);
  CHECK_THROWS_AS(mras_step(spy, s, {NodalField(other, 1.0), z, z, z}, TimeGrid(0.5, 100)), InputError);
}

TEST_CASE("a window only reads its own data") {
  const Mesh m = jittered_square(5);
  const auto problem = make_problem(m, ProblemSpec::defaults(ProblemKind::darcy, m), {}, tight());
  ObservationSeries obs;
  obs.grid = TimeGrid(0.01, 6);
  for (unsigned k = 0; k <= 6; ++k) {
    obs.snapshots.push_back(zero_on_boundary(m, random_vector(m.num_vertices(), 50 + k)));
    obs.sources.emplace_back(m, random_vector(m.num_vertices(), 60 + k));
  }
  ObservationSeries later = obs;
  for (std::size_t k = 4; k <= 6; ++k) {
    later.snapshots[k] = NodalField(m, 9.0);
    later.sources[k] = NodalField(m, -9.0);
  }
  later.sources[0] = NodalField(m, 123.0);
  const CellField q0(m, 1.0);
  const NodalField u0(m, 0.0);
  MrasState a{q0, u0, 0}, b{q0, u0, 0};
  for (std::size_t n = 0; n < 3; ++n) {
    a = mras_step(*problem, a, step_inputs(obs, n), obs.grid);
    b = mras_step(*problem, b, step_inputs(later, n), later.grid);
  }
  CHECK(max_abs_diff(a.q.values(), b.q.values()) == 0.0);
  CHECK(max_abs_diff(a.u.values(), b.u.values()) == 0.0);
}

TEST_CASE("run with zero steps returns the initial state") {
  const Mesh m = jittered_square(4);
  const auto problem = make_problem(m, ProblemSpec::defaults(ProblemKind::darcy, m), {});
  const CellField q0(m, 0.7);
  const NodalField u0 = zero_on_boundary(m, random_vector(m.num_vertices(), 70));
  const auto obs = constant_series(m, u0, NodalField(m, 0.0), 0.01, 0);
  const CellField qt(m, 1.0);
  const auto res = run(*problem, {q0, u0, 0}, obs, qt, {u0});
  CHECK(res.errors.size() == 1);
  CHECK(max_abs_diff(res.final_state.q.values(), q0.values()) == 0.0);
  CHECK(max_abs_diff(res.final_state.u.values(), u0.values()) == 0.0);
  CHECK(res.errors.eq_norms[0] == doctest::Approx(0.3 * std::sqrt(m.total_area())).epsilon(1e-12));
}

TEST_CASE("run rejects mismatched series") {
  const Mesh m = jittered_square(4);
  const auto problem = make_problem(m, ProblemSpec::defaults(ProblemKind::darcy, m), {});
  const NodalField z(m, 0.0);
  auto obs = constant_series(m, z, z, 0.01, 3);
  const CellField q(m, 1.0);
  const std::vector<NodalField> truth(4, z);
  CHECK_NOTHROW(run(*problem, {q, z, 0}, obs, q, truth));
  CHECK_THROWS_AS(run(*problem, {q, z, 0}, obs, q, std::vector<NodalField>(3, z)), InputError);
  auto short_obs = obs;
  short_obs.snapshots.pop_back();
  CHECK_THROWS_AS(run(*problem, {q, z, 0}, short_obs, q, truth), InputError);
  auto short_src = obs;
  short_src.sources.pop_back();
  CHECK_THROWS_AS(run(*problem, {q, z, 0}, short_src, q, truth), InputError);
}

TEST_CASE("run started at the truth stays there") {
  const Mesh m = jittered_square(6);
  const auto problem = make_problem(m, ProblemSpec::defaults(ProblemKind::darcy, m), {}, tight());
  const CellField a(m, random_vector(m.num_triangles(), 80, 0.5, 1.5));
  const NodalField z = zero_on_boundary(m, random_vector(m.num_vertices(), 81));
  const auto obs = constant_series(m, z, compatible_source(m, a, z), 0.01, 20);
  RunOptions opt;
  opt.snapshot_times = {0.0, 0.1, 0.2, 0.5};
  std::size_t hook_calls = 0;
  opt.on_step = [&](const MrasState&, const ErrorSample&) { ++hook_calls; };
  const auto res = run(*problem, {a, z, 0}, obs, a, std::vector<NodalField>(21, z), opt);
  CHECK(res.errors.size() == 21);
  CHECK(hook_calls == 21);
  for (double eq : res.errors.eq_norms) CHECK(eq <= 1e-6 * l2_norm(a));
  for (double eu : res.errors.eu_norms) CHECK(eu <= 1e-9);
  REQUIRE(res.snapshots.size() == 3);
  CHECK(res.snapshots[0].step == 0);
  CHECK(res.snapshots[1].step == 10);
  CHECK(res.snapshots[2].step == 20);
  CHECK(res.final_state.step_index == 20);
  // u = z from the first step on
  REQUIRE(res.discrepancy_step.has_value());
  CHECK(*res.discrepancy_step == 1);
}

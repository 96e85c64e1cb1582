#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mras/benchmarks.hpp"
#include "mras/error.hpp"
#include "mras/synth.hpp"
#include "oracle/dense_fem.hpp"
#include "support.hpp"

using namespace mras;
using oracle::Mat;
using oracle::Vec;
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

StabilizerConfig potential_cfg(double bound) {
  StabilizerConfig c;
  c.true_param_norm_bound = bound;
  return c;
}

}  // namespace

TEST_CASE("problem kinds") {
  CHECK(to_string(ProblemKind::fisher_kpp) == "fisher_kpp");
  CHECK(parse_problem_kind("allen_cahn") == ProblemKind::allen_cahn);
  CHECK(parse_problem_kind("nonlinear_potential") == ProblemKind::nonlinear_potential);
  CHECK_THROWS_AS(parse_problem_kind("heat"), InputError);
  CHECK(reaction_power(ProblemKind::nonlinear_potential) == 1);
  CHECK(reaction_power(ProblemKind::allen_cahn) == 3);

  const Mesh m = jittered_square(3);
  for (auto k : {ProblemKind::darcy, ProblemKind::fisher_kpp, ProblemKind::nonlinear_potential,
                 ProblemKind::allen_cahn}) {
    const ProblemSpec s = ProblemSpec::defaults(k, m);
    CHECK_NOTHROW(s.validate());
    const bool nl = k == ProblemKind::nonlinear_potential || k == ProblemKind::allen_cahn;
    CHECK(s.sigma == (nl ? 1 : 0));
    CHECK((s.boundary == BoundaryMode::data_dirichlet) == nl);
    ProblemSpec bad = s;
    bad.sigma = 1 - s.sigma;
    CHECK_THROWS_AS(bad.validate(), InputError);
  }
}

TEST_CASE("darcy parameter update") {
  const Mesh m = jittered_square(4);
  const CellField a(m, random_vector(m.num_triangles(), 1, 0.2, 1.0));
  const NodalField z(m, random_vector(m.num_vertices(), 2));
  const CellField same = darcy_q_update(a, z, z, 0.1);
  CHECK(max_abs_diff(same.values(), a.values()) == 0.0);

  const NodalField u(m, random_vector(m.num_vertices(), 3));
  const CellField frozen = darcy_q_update(a, u, z, 0.0);
  CHECK(max_abs_diff(frozen.values(), a.values()) == 0.0);

  // grad z = (1, 0), grad (u - z) = (2, 0) on the reference triangle
  const Mesh ref = testing_support::reference_triangle();
  const NodalField zr(ref, {0.0, 1.0, 0.0});
  const NodalField ur(ref, {0.0, 3.0, 0.0});
  const CellField a1 = darcy_q_update(CellField(ref, 0.5), ur, zr, 0.1);
  CHECK(a1[0] == doctest::Approx(0.7).epsilon(1e-14));
  const CellField f1 = fisher_q_update(CellField(ref, 0.5), ur, zr, 0.1);
  CHECK(f1[0] == doctest::Approx(0.7).epsilon(1e-14));

  // fisher delegates to the same law
  const CellField fa = fisher_q_update(a, u, z, 0.05);
  const CellField da = darcy_q_update(a, u, z, 0.05);
  CHECK(max_abs_diff(fa.values(), da.values()) == 0.0);
}

TEST_CASE("darcy state system is stationary at the truth") {
  const Mesh m = jittered_square(6);
  const CellField a(m, random_vector(m.num_triangles(), 5, 0.3, 1.5));
  const NodalField z = zero_on_boundary(m, random_vector(m.num_vertices(), 6));
  // g with M g = K_a z, so that -div(a grad z) = g holds discretely
  const Vec g = oracle::mass(m).ldlt().solve(oracle::stiffness(m, a.values()) * oracle::vec(z.values()));
  const NodalField gf(m, std::vector<double>(g.data(), g.data() + g.size()));
  const NodalField u = darcy_u_system(a, z, z, gf, 0.01, tight());
  CHECK(max_abs_diff(u.values(), z.values()) <= 1e-10);
}

TEST_CASE("darcy and fisher state systems match the dense oracle") {
  for (const Mesh& m : {testing_support::two_triangles(), jittered_square(5, 7)}) {
    const CellField a(m, random_vector(m.num_triangles(), 11, 0.2, 2.0));
    const NodalField un = zero_on_boundary(m, random_vector(m.num_vertices(), 12));
    const NodalField zn(m, random_vector(m.num_vertices(), 13));
    const NodalField z1(m, random_vector(m.num_vertices(), 14));
    const NodalField g(m, random_vector(m.num_vertices(), 15));
    for (bool fisher : {false, true}) {
      const auto ref = oracle::diffusion_step(m, a.values(), un.values(), zn.values(), z1.values(),
                                              g.values(), 0.02, fisher);
      const CellField q = fisher ? fisher_q_update(a, un, zn, 0.02) : darcy_q_update(a, un, zn, 0.02);
      CHECK(max_abs_diff(q.values(), ref.q) <= 1e-12);
      const NodalField u = fisher ? fisher_u_system(q, un, z1, g, 0.02, tight())
                                  : darcy_u_system(q, un, z1, g, 0.02, tight());
      CHECK((oracle::vec(u.values()) - ref.u).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("darcy state system is continuous in dt") {
  const Mesh m = jittered_square(5);
  const NodalField un = zero_on_boundary(m, random_vector(m.num_vertices(), 21));
  const NodalField z(m, random_vector(m.num_vertices(), 22));
  const NodalField g(m, random_vector(m.num_vertices(), 23));
  // u - u_n = O(dt)
  const NodalField u1 = darcy_u_system(CellField(m, 1.0), un, z, g, 1e-9, tight());
  const NodalField u2 = darcy_u_system(CellField(m, 1.0), un, z, g, 1e-12, tight());
  const double d1 = max_abs_diff(u1.values(), un.values());
  const double d2 = max_abs_diff(u2.values(), un.values());
  CHECK(d1 <= 1e-5);
  CHECK(d2 / d1 == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("fisher reduces to darcy for vanishing reaction data") {
  const Mesh m = jittered_square(5);
  const CellField a(m, random_vector(m.num_triangles(), 31, 0.2, 2.0));
  const NodalField un = zero_on_boundary(m, random_vector(m.num_vertices(), 32));
  const NodalField g(m, random_vector(m.num_vertices(), 33));
  for (double zc : {0.0, 1.0}) {
    const NodalField z(m, zc);
    const NodalField uf = fisher_u_system(a, un, z, g, 0.03, tight());
    const NodalField ud = darcy_u_system(a, un, z, g, 0.03, tight());
    CHECK(max_abs_diff(uf.values(), ud.values()) <= 1e-12);
  }
}

TEST_CASE("stabilizer constant") {
  StabilizerConfig cfg;
  cfg.true_param_norm_bound = 0.0;
  CHECK(stabilizer_constant(0.0, 0.0, cfg) == doctest::Approx(1.0).epsilon(1e-15));

  cfg.true_param_norm_bound = 2.0;
  const double base = stabilizer_constant(1.3, 0.4, cfg) - 1.0;
  StabilizerConfig doubled = cfg;
  doubled.z_upper *= 2.0;
  CHECK(stabilizer_constant(1.3, 0.4, doubled) - 1.0 == doctest::Approx(4.0 * base).epsilon(1e-13));

  // closed form C_emb^2 (2 zu^2 / zl) (|c|^{2/3} + |c+|^{2/3} + |c~|^{2/3})^2 + 1
  cfg.z_lower = 1.0;
  cfg.z_upper = 1.5;
  cfg.embedding_constant = 1.0;
  cfg.true_param_norm_bound = 8.07;
  const double s = std::cbrt(7.14 * 7.14) + std::cbrt(8.07 * 8.07) + 0.0;
  CHECK(stabilizer_constant(7.14, 0.0, cfg) == doctest::Approx(2.0 * 1.5 * 1.5 * s * s + 1.0).epsilon(1e-13));
  cfg.embedding_constant = 0.7;
  cfg.z_lower = 0.05;
  CHECK(stabilizer_constant(7.14, 0.0, cfg) ==
        doctest::Approx(0.49 * 2.0 * 1.5 * 1.5 / 0.05 * s * s + 1.0).epsilon(1e-13));

  // nondecreasing in |c_n| and at least one
  double prev = 0.0;
  for (double c = 0.0; c < 20.0; c += 0.37) {
    const double v = stabilizer_constant(c, 0.3, cfg);
    CHECK(v >= 1.0);
    CHECK(v >= prev);
    prev = v;
  }

  const Mesh m = jittered_square(3);
  const CellField cn(m, random_vector(m.num_triangles(), 41));
  const CellField ct(m, random_vector(m.num_triangles(), 42));
  CHECK(stabilizer_constant(cn, cfg, ct) ==
        doctest::Approx(stabilizer_constant(l2_norm(cn), l2_norm(ct), cfg)).epsilon(1e-15));

  CHECK(lipschitz_constant(1.0, 1.0, 1.0, cfg) == doctest::Approx(5.0 / 3.0 * 1.5 * 0.7 * 3.0));
}

TEST_CASE("stabilizer config validation") {
  StabilizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.z_lower = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.z_upper = 0.5;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.M = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.scale = 0.9;
  CHECK_THROWS_AS(c.validate(), InputError);
  const auto ac = StabilizerConfig::defaults(ProblemKind::allen_cahn);
  CHECK(ac.z_lower == 0.05);
  CHECK(ac.z_upper == 1.5);
  CHECK(StabilizerConfig{}.scale == doctest::Approx(4.0 * 0.36));
}

TEST_CASE("potential parameter update, hand example") {
  // c_n = c~ = 0, z = 1, u_n - z_n = alpha, dz_dt = g: dc = dt alpha / (1 + dt)
  const Mesh m = jittered_square(4);
  const double alpha = 0.3, dt = 0.05;
  const NodalField z(m, 1.0), u(m, 1.0 + alpha), w(m, 0.7);
  const ProblemSpec spec = ProblemSpec::defaults(ProblemKind::nonlinear_potential, m);
  const PotentialStepData data{u, z, z, w, w};
  const CellField c1 = potential_q_update(CellField(m, 0.0), data, dt, spec);
  for (double v : c1.values()) CHECK(v == doctest::Approx(dt * alpha / (1.0 + dt)).epsilon(1e-13));
  const CellField c0 = potential_q_update(CellField(m, 0.0), data, 0.0, spec);
  for (double v : c0.values()) CHECK(v == 0.0);
  // z = 1 makes z^3 = z
  const CellField a1 = allen_cahn_q_update(CellField(m, 0.0), data, dt, spec);
  CHECK(max_abs_diff(a1.values(), c1.values()) <= 1e-15);
}

TEST_CASE("potential updates are stationary at compatible data") {
  // spatially constant data has no boundary flux; g matches the printed residual
  const Mesh m = jittered_square(5);
  const CellField c(m, random_vector(m.num_triangles(), 51, 0.5, 3.0));
  const ProblemSpec spec = ProblemSpec::defaults(ProblemKind::nonlinear_potential, m);
  const StabilizerConfig cfg = potential_cfg(3.0);
  for (int p : {1, 3}) {
    const double zn = 1.2, z1 = 1.25, dt = 0.01;
    const NodalField zfn(m, zn), zf1(m, z1), dz(m, (z1 - zn) / dt);
    // g is P1 so only its element average matters; build it per vertex from the element values
    // by taking c constant per element is not P1, so use a P0-compatible check instead:
    // with u_n = z_n the residual integrand per element is dz + c z1^p + |c|^{2/3} c zn - g.
    std::vector<double> gv(m.num_vertices(), 0.0);
    const CellField cc(m, 1.7);
    const double k = std::cbrt(1.7 * 1.7);
    std::fill(gv.begin(), gv.end(), (z1 - zn) / dt + 1.7 * std::pow(z1, p) + k * 1.7 * zn);
    const NodalField g(m, gv);
    const PotentialStepData data{zfn, zfn, zf1, dz, g};
    const CellField next = p == 1 ? potential_q_update(cc, data, dt, spec)
                                  : allen_cahn_q_update(cc, data, dt, spec);
    CHECK(max_abs_diff(next.values(), cc.values()) <= 1e-13);
  }

  // state system: u_n = z_n = z_{n+1}, c_{n+1} = c_n, g = c (z^p + |c|^{2/3} z)
  for (int p : {1, 3}) {
    const NodalField z(m, 1.3);
    const double k = std::cbrt(1.7 * 1.7);
    const NodalField g(m, 1.7 * (std::pow(1.3, p) + k * 1.3));
    const NodalField dz(m, 0.0);
    const CellField cc(m, 1.7);
    const PotentialStepData data{z, z, z, dz, g};
    const NodalField u = p == 1 ? potential_u_system(cc, cc, data, 0.01, cfg, spec, tight())
                                : allen_cahn_u_system(cc, cc, data, 0.01, cfg, spec, tight());
    CHECK(max_abs_diff(u.values(), z.values()) <= 1e-12);
    // a much larger stabilizer leaves the zero residual untouched
    StabilizerConfig big = cfg;
    big.scale *= 10.0;
    const NodalField ub = potential_u_system(cc, cc, data, 0.01, big, spec, tight());
    if (p == 1) CHECK(max_abs_diff(ub.values(), z.values()) <= 1e-12);
  }
  (void)c;
}

TEST_CASE("potential and Allen-Cahn steps match the dense oracle") {
  for (const Mesh& m : {testing_support::two_triangles(), jittered_square(5, 9)}) {
    const CellField cn(m, random_vector(m.num_triangles(), 61, -1.0, 3.0));
    const CellField ct(m, random_vector(m.num_triangles(), 62, 0.0, 1.0));
    const NodalField un(m, random_vector(m.num_vertices(), 63, 1.0, 1.5));
    const NodalField zn(m, random_vector(m.num_vertices(), 64, 1.0, 1.5));
    const NodalField z1(m, random_vector(m.num_vertices(), 65, 1.0, 1.5));
    const NodalField g(m, random_vector(m.num_vertices(), 66));
    const double dt = 0.02;
    const NodalField dz = backward_difference(zn, z1, dt);
    ProblemSpec spec = ProblemSpec::defaults(ProblemKind::nonlinear_potential, m);
    spec.c_tilde = ct;
    StabilizerConfig cfg = potential_cfg(2.5);
    cfg.z_lower = 0.8;
    cfg.embedding_constant = 0.6;
    const PotentialStepData data{un, zn, z1, dz, g};
    for (int p : {1, 3}) {
      oracle::PotentialParams prm;
      prm.power = p;
      prm.embedding = 0.6;
      prm.z_lower = 0.8;
      prm.z_upper = cfg.z_upper;
      prm.true_norm = 2.5;
      const auto ref = oracle::potential_step(m, cn.values(), ct.values(), un.values(), zn.values(),
                                              z1.values(), g.values(), dt, prm);
      const CellField c1 = p == 1 ? potential_q_update(cn, data, dt, spec) : allen_cahn_q_update(cn, data, dt, spec);
      CHECK(max_abs_diff(c1.values(), ref.q) <= 1e-10);
      const NodalField u1 = p == 1 ? potential_u_system(cn, c1, data, dt, cfg, spec, tight())
                                   : allen_cahn_u_system(cn, c1, data, dt, cfg, spec, tight());
      CHECK((oracle::vec(u1.values()) - ref.u).cwiseAbs().maxCoeff() <= 1e-10);
      // boundary values are the data
      for (std::size_t i = 0; i < m.num_vertices(); ++i)
        if (m.is_boundary_vertex(i)) CHECK(u1[i] == doctest::Approx(z1[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("Allen-Cahn reduces to the potential problem at z = 1") {
  const Mesh m = jittered_square(4);
  const CellField cn(m, random_vector(m.num_triangles(), 71, -2.0, 3.0));
  const NodalField one(m, 1.0);
  const NodalField un(m, random_vector(m.num_vertices(), 72, 0.8, 1.2));
  const NodalField g(m, random_vector(m.num_vertices(), 73));
  const NodalField dz(m, random_vector(m.num_vertices(), 74));
  const ProblemSpec spec = ProblemSpec::defaults(ProblemKind::allen_cahn, m);
  const StabilizerConfig cfg = potential_cfg(4.0);
  const PotentialStepData data{un, one, one, dz, g};
  const CellField cp = potential_q_update(cn, data, 0.01, spec);
  const CellField ca = allen_cahn_q_update(cn, data, 0.01, spec);
  CHECK(max_abs_diff(cp.values(), ca.values()) <= 1e-12);
  const NodalField up = potential_u_system(cn, cp, data, 0.01, cfg, spec, tight());
  const NodalField ua = allen_cahn_u_system(cn, ca, data, 0.01, cfg, spec, tight());
  CHECK(max_abs_diff(up.values(), ua.values()) <= 1e-12);
}

TEST_CASE("uniform time index switch only changes mixed-index terms") {
  const Mesh m = jittered_square(4);
  const CellField cn(m, random_vector(m.num_triangles(), 75, 0.5, 2.0));
  const NodalField un(m, random_vector(m.num_vertices(), 76, 1.0, 1.5));
  const NodalField z(m, random_vector(m.num_vertices(), 77, 1.0, 1.5));
  const NodalField g(m, random_vector(m.num_vertices(), 78));
  const NodalField dz(m, 0.0);
  ProblemSpec spec = ProblemSpec::defaults(ProblemKind::nonlinear_potential, m);
  const PotentialStepData data{un, z, z, dz, g};
  const CellField a = potential_q_update(cn, data, 0.01, spec);
  spec.uniform_time_index = true;
  const CellField b = potential_q_update(cn, data, 0.01, spec);
  // z_n = z_{n+1} here, so the switch is invisible
  CHECK(max_abs_diff(a.values(), b.values()) <= 1e-15);
}

TEST_CASE("nonpositive diagonal factor is a data error") {
  const Mesh m = jittered_square(3);
  const NodalField z(m, -50.0), u(m, 0.0), w(m, 0.0);
  const ProblemSpec spec = ProblemSpec::defaults(ProblemKind::nonlinear_potential, m);
  const PotentialStepData data{u, z, z, w, w};
  CHECK_THROWS_AS(potential_q_update(CellField(m, 1.0), data, 0.1, spec), DataError);
}

TEST_CASE("diffusion parameter update ignores source and data derivative") {
  const Mesh m = jittered_square(4);
  const ProblemSpec spec = ProblemSpec::defaults(ProblemKind::darcy, m);
  for (auto kind : {ProblemKind::darcy, ProblemKind::fisher_kpp}) {
    const auto problem = make_problem(m, ProblemSpec::defaults(kind, m), StabilizerConfig{});
    MrasState st{CellField(m, random_vector(m.num_triangles(), 81, 0.3, 1.0)),
                 zero_on_boundary(m, random_vector(m.num_vertices(), 82)), 0};
    StepInputs in{NodalField(m, random_vector(m.num_vertices(), 83)),
                  NodalField(m, random_vector(m.num_vertices(), 84)),
                  NodalField(m, random_vector(m.num_vertices(), 85)),
                  NodalField(m, random_vector(m.num_vertices(), 86))};
    const CellField q1 = problem->update_parameter(st, in, 0.01);
    in.g_np1 = NodalField(m, 123.0);
    in.dz_dt = NodalField(m, -7.0);
    const CellField q2 = problem->update_parameter(st, in, 0.01);
    CHECK(max_abs_diff(q1.values(), q2.values()) == 0.0);
  }
  (void)spec;
}

TEST_CASE("coercivity of the potential model") {
  // scalar brute force: (c - c+)^2 + (phi(c) - phi(c+))(c - c+) >= (c - c+)^2
  const auto phi = [](double c) { return std::cbrt(c * c) * c; };
  for (double c = -6.0; c <= 6.0; c += 0.05)
    for (double ct = -6.0; ct <= 6.0; ct += 0.05) {
      const double d = c - ct;
      CHECK(d * d + (phi(c) - phi(ct)) * d >= d * d - 1e-12);
    }

  const Mesh m = disk_mesh(std::numbers::pi, 0.5);
  const TruthModel t = make_truth(ProblemKind::nonlinear_potential);
  const NodalField z = sample_nodes(m, t.initial_state);
  const CellField ct = sample_cells(m, t.parameter);
  const auto rep = coercivity_check(z, ct, 200, 5, 1.0);
  CHECK(rep.samples == 200);
  CHECK(rep.failures == 0);
  CHECK(rep.min_ratio >= 1.0);

  // z below the claimed bound is caught
  const auto low = coercivity_check(NodalField(m, 0.01), ct, 50, 5, 1.0);
  CHECK(low.failures > 0);
}

TEST_CASE("Lipschitz bound of the linearization") {
  const Mesh m = disk_mesh(std::numbers::pi, 0.6);
  const TruthModel t = make_truth(ProblemKind::nonlinear_potential);
  const NodalField z = sample_nodes(m, t.initial_state);
  StabilizerConfig cfg;
  cfg.z_upper = 1.5;
  for (unsigned s = 0; s < 5; ++s) {
    const CellField c(m, random_vector(m.num_triangles(), 90 + s, -3.0, 3.0));
    const CellField ctrue(m, random_vector(m.num_triangles(), 100 + s, 0.0, 3.0));
    const CellField ctil(m, random_vector(m.num_triangles(), 110 + s, -1.0, 1.0));
    const auto rep = lipschitz_check(z, c, ctrue, ctil, cfg, 30, s);
    CHECK(rep.sampled_norm <= rep.dual_norm * (1 + 1e-12));
    CHECK(rep.holds());
  }
}

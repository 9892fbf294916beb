#include "memddg/solver.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace memddg;
using namespace memddg::testing;
using Catch::Approx;

namespace {

System squashed_vesicle(int subdiv = 2) {
  System s;
  auto m = icosphere(subdiv);
  s.mesh = m.mesh;
  s.positions = m.positions;
  s.positions.col(2) *= 0.7;
  s.phi = Eigen::VectorXd::Zero(s.positions.rows());
  s.params.kappa_b = 8.22e-5;
  s.params.K_A = 1.0;
  s.params.preferred_area = total_area(s.mesh, s.positions);
  s.params.pressure_law = PressureLaw::VanHoff;
  s.params.K_V = 0.1;
  s.params.concentration_ratio = 1.0 / enclosed_volume(s.mesh, s.positions);
  return s;
}

Vec3 center_of_mass(const VertexPositions &r) { return r.colwise().mean().transpose(); }

} // namespace

TEST_CASE("L2 residual") {
  VertexMatrix f = VertexMatrix::Zero(4, 3);
  CHECK(l2_residual(f) == 0.0);
  f.row(2) << 3.0, 4.0, 0.0;
  CHECK(l2_residual(f) == 5.0);
  CHECK(l2_residual(VertexMatrix(-2.5 * f)) == Approx(12.5));
}

TEST_CASE("L1 field error") {
  std::mt19937_64 rng(5);
  const Eigen::VectorXd a = random_field(30, -1.0, 1.0, rng);
  CHECK(l1_field_error(a, a, 2.0) == 0.0);
  const Eigen::VectorXd b = random_field(30, -1.0, 1.0, rng);
  VertexMatrix va = VertexMatrix::Zero(30, 3), vb = VertexMatrix::Zero(30, 3);
  va.col(0) = a;
  vb.col(0) = b;
  CHECK(l1_field_error(va, vb, 3.0) == Approx(l1_field_error(a, b, 3.0)));
  CHECK(l1_field_error(a, b, 3.0) == Approx((a - b).cwiseAbs().sum() / 3.0));
  try {
    l1_field_error(a, Eigen::VectorXd(a.head(29)), 1.0);
    FAIL("expected LengthMismatch");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("solver configuration is validated") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.shrink = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.sufficient_decrease = 0.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.tolerance = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("forward Euler leaves a force-free state alone") {
  System s;
  auto m = hex_patch(1.0, 3);
  s.mesh = m.mesh;
  s.positions = m.positions;
  s.phi = Eigen::VectorXd::Zero(s.positions.rows());
  SolverConfig cfg;
  SolverState st = SolverState::from(cfg);
  const VertexPositions before = s.positions;
  forward_euler_step(s, cfg, st);
  CHECK(s.positions == before);
}

TEST_CASE("forward Euler decreases energy and keeps the center of mass") {
  System s = squashed_vesicle();
  SolverConfig cfg;
  cfg.dt_init = 0.5;
  SolverState st = SolverState::from(cfg);
  double e = total_energy(s).total;
  const Vec3 com0 = center_of_mass(s.positions);
  for (int k = 0; k < 50; ++k) {
    const auto res = forward_euler_step(s, cfg, st);
    REQUIRE(res.moved);
    CHECK(res.energy_after < res.energy_before);
    CHECK(res.energy_before == Approx(e).epsilon(1e-12));
    e = res.energy_after;
    CHECK((center_of_mass(s.positions) - com0).norm() <= 1e-8 * (k + 1));
  }
  CHECK(s.time > 0.0);
}

TEST_CASE("gradient descent in a quadratic well contracts at the predicted rate") {
  // Center of a pinned hexagonal fan held by edge-length springs. The
  // contraction factor per step is 1 − dt·k/ξ, with k measured by differences.
  System s;
  auto m = hex_patch(1.0, 1);
  s.mesh = m.mesh;
  s.positions = m.positions;
  s.phi = Eigen::VectorXd::Zero(s.positions.rows());
  s.params.xi = 2.0;
  s.bcs.shape.kind = BoundaryKind::Pinned;
  s.regularization.K_e = 1.0;
  s.regularization.capture(s.mesh, compute_geometry(s.mesh, s.positions));
  REQUIRE(s.positions.row(0).norm() == 0.0);

  auto energy_at = [&](double x) {
    System t = s;
    t.positions(0, 0) = x;
    return total_energy(t).total;
  };
  const double h = 1e-4;
  const double k = (energy_at(h) + energy_at(-h) - 2.0 * energy_at(0.0)) / (h * h);
  REQUIRE(k > 0.0);

  SolverConfig cfg;
  cfg.dt_init = 0.3 * s.params.xi / k;
  SolverState st = SolverState::from(cfg);
  s.positions(0, 0) = 1e-3;
  const double predicted = 1.0 - cfg.dt_init * k / s.params.xi;
  double x = s.positions(0, 0);
  for (int step = 0; step < 20; ++step) {
    const auto res = forward_euler_step(s, cfg, st);
    CHECK(res.backtracks == 0);
    const double ratio = s.positions(0, 0) / x;
    CHECK(ratio == Approx(predicted).margin(1e-4));
    x = s.positions(0, 0);
  }
  CHECK(std::abs(s.positions(0, 1)) < 1e-15);
  CHECK(std::abs(x) < 1e-3 * std::pow(0.71, 20));
}

TEST_CASE("conjugate gradient") {
  SECTION("converged start returns immediately") {
    System s;
    auto m = hex_patch(1.0, 2);
    s.mesh = m.mesh;
    s.positions = m.positions;
    s.phi = Eigen::VectorXd::Zero(s.positions.rows());
    const VertexPositions before = s.positions;
    const auto rep = conjugate_gradient_minimize(s, SolverConfig{});
    CHECK(rep.reason == TerminationReason::Converged);
    CHECK(rep.steps == 0);
    CHECK(s.positions == before);
  }
  SECTION("oblate vesicle relaxes monotonically to tolerance") {
    // Edge springs keep the triangulation from sliding into slivers.
    System s = squashed_vesicle(2);
    s.regularization.K_e = 1e-3;
    s.regularization.capture(s.mesh, compute_geometry(s.mesh, s.positions));
    SolverConfig cfg;
    cfg.dt_init = 1.0;
    cfg.tolerance = 1e-6;
    cfg.max_steps = 5000;
    double previous = total_energy(s).total;
    bool monotone = true;
    const auto rep = conjugate_gradient_minimize(s, cfg, [&](const System &, const StepRecord &r) {
      monotone = monotone && r.shape.energy_after < r.shape.energy_before &&
                 r.shape.energy_before <= previous * (1 + 1e-14) + 1e-300;
      previous = r.shape.energy_after;
    });
    INFO("steps " << rep.steps << " residual " << rep.residual << " " << rep.message);
    CHECK(monotone);
    CHECK(rep.reason == TerminationReason::Converged);
    CHECK(rep.residual <= cfg.tolerance);
    CHECK(l2_residual(evaluate(s, {.forces = true, .potentials = false}).forces.net) <= cfg.tolerance);
  }
  SECTION("restart period one is gradient descent") {
    System a = squashed_vesicle(1);
    SolverConfig cfg;
    cfg.dt_init = 0.5;
    cfg.cg_restart_period = 1;
    SolverState sa = SolverState::from(cfg);
    for (int k = 0; k < 5; ++k) {
      const auto ev = evaluate(a, {.forces = true, .potentials = false});
      conjugate_gradient_step(a, cfg, sa, ev);
      CHECK(sa.cg_direction == ev.forces.net);
    }
  }
}

TEST_CASE("protein evolution") {
  System s;
  auto m = hex_patch(1.0, 4);
  s.mesh = m.mesh;
  s.positions = m.positions;
  s.phi = Eigen::VectorXd::Constant(s.positions.rows(), 0.3);
  SolverConfig cfg;
  SolverState st = SolverState::from(cfg);

  SECTION("zero mobility leaves phi unchanged") {
    s.params.epsilon = -1.0;
    const auto phi = s.phi;
    evolve_protein(s, cfg, st, 1.0);
    CHECK(s.phi == phi);
  }
  SECTION("uniform phi on a flat patch without adsorption is stationary") {
    s.params.mobility = 3.0;
    s.params.eta = 0.01;
    cfg.barrier_strength = 0.0;
    st = SolverState::from(cfg);
    const auto phi = s.phi;
    evolve_protein(s, cfg, st, 1.0);
    CHECK((s.phi - phi).norm() < 1e-14);
  }
  SECTION("barrier keeps phi strictly inside the unit interval") {
    s.params.mobility = 1.0;
    s.params.epsilon = -1.0; // drives φ up hard
    s.phi.setConstant(0.9);
    double objective = 1e300;
    for (int k = 0; k < 200; ++k) {
      const auto res = evolve_protein(s, cfg, st, 10.0);
      if (res.moved) {
        CHECK(res.energy_after < res.energy_before);
        CHECK(res.energy_before <= objective);
        objective = res.energy_after;
      }
      REQUIRE(s.phi.maxCoeff() < 1.0);
      REQUIRE(s.phi.minCoeff() > 0.0);
    }
    CHECK(s.phi.minCoeff() > 0.9);
  }
  SECTION("without the barrier an overshoot is an error") {
    s.params.mobility = 1.0;
    s.params.epsilon = -1.0;
    cfg.barrier_strength = 0.0;
    st = SolverState::from(cfg);
    try {
      evolve_protein(s, cfg, st, 100.0);
      FAIL("expected PhiOutOfBounds");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::PhiOutOfBounds);
    }
  }
  SECTION("Dirichlet vertices hold their value") {
    s.params.mobility = 1.0;
    s.params.eta = 0.1;
    s.bcs.protein_dirichlet = 0.3;
    std::mt19937_64 rng(2);
    s.phi = random_field(s.mesh.n_vertices(), 0.2, 0.8, rng);
    for (Eigen::Index i = 0; i < s.phi.size(); ++i)
      if (s.mesh.is_boundary_vertex(std::size_t(i))) s.phi[i] = 0.3;
    for (int k = 0; k < 10; ++k) evolve_protein(s, cfg, st, 1.0);
    for (Eigen::Index i = 0; i < s.phi.size(); ++i)
      if (s.mesh.is_boundary_vertex(std::size_t(i))) CHECK(s.phi[i] == 0.3);
  }
}

TEST_CASE("diffusion alone nearly conserves total protein") {
  // Σ_i (Lφ)_i = 0 exactly; Σ A_i (Lφ)_i is bounded by the spread of A_i.
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    auto m = noisy_icosphere(3, 0.01, 40 + trial);
    const Geometry g = compute_geometry(m.mesh, m.positions);
    const Eigen::VectorXd phi = random_field(m.mesh.n_vertices(), 0.1, 0.9, rng);
    const Eigen::VectorXd mu_d = dirichlet_potential(cotan_laplacian(m.mesh, g), phi, 0.01);
    const Eigen::Map<const Eigen::VectorXd> A(g.vertex_dual_area.data(), Eigen::Index(g.vertex_dual_area.size()));
    CHECK(std::abs(mu_d.sum()) <= 1e-13 * mu_d.cwiseAbs().sum());
    const double spread = A.maxCoeff() - A.minCoeff();
    CHECK(std::abs(A.dot(mu_d)) <= spread * mu_d.cwiseAbs().sum());
  }
}

TEST_CASE("mechanochemical splitting limits") {
  SECTION("zero mobility is pure shape dynamics") {
    System a = squashed_vesicle(1), b = a;
    SolverConfig cfg;
    cfg.dt_init = 0.5;
    SolverState sa = SolverState::from(cfg), sb = SolverState::from(cfg);
    for (int k = 0; k < 5; ++k) {
      mechanochemical_step(a, cfg, sa);
      forward_euler_step(b, cfg, sb);
    }
    CHECK(a.positions == b.positions);
    CHECK(a.phi == b.phi);
  }
  SECTION("infinite drag freezes the shape") {
    System s = squashed_vesicle(1);
    s.params.mobility = 1.0;
    s.params.eta = 0.01;
    s.params.epsilon = -1e-3;
    std::mt19937_64 rng(4);
    s.phi = random_field(s.mesh.n_vertices(), 0.2, 0.8, rng);
    s.params.xi = std::numeric_limits<double>::infinity();
    const VertexPositions r = s.positions;
    const Eigen::VectorXd phi = s.phi;
    SolverConfig cfg;
    cfg.dt_init = 1.0;
    SolverState st = SolverState::from(cfg);
    mechanochemical_step(s, cfg, st);
    CHECK(s.positions == r);
    CHECK(s.phi != phi);
  }
}

TEST_CASE("run_dynamics reports convergence honestly and keeps masked vertices fixed") {
  System s;
  auto m = hex_patch(1.0, 4);
  s.mesh = m.mesh;
  s.positions = m.positions;
  std::mt19937_64 rng(9);
  for (Eigen::Index i = 0; i < s.positions.rows(); ++i)
    if (!s.mesh.is_boundary_vertex(std::size_t(i))) s.positions(i, 2) += 0.05 * std::uniform_real_distribution<double>(-1, 1)(rng);
  s.phi = Eigen::VectorXd::Zero(s.positions.rows());
  s.params.fixed_tension = 1e-3;
  s.bcs.shape.kind = BoundaryKind::Pinned;
  const VertexPositions r0 = s.positions;
  SolverConfig cfg;
  cfg.dt_init = 10.0;
  cfg.dt_max = 100.0;
  cfg.tolerance = 1e-8;
  cfg.max_steps = 20000;
  std::size_t records = 0;
  const auto rep = run_dynamics(s, cfg, [&](const System &, const StepRecord &r) {
    ++records;
    CHECK(r.shape.energy_after <= r.shape.energy_before);
  });
  INFO(rep.message);
  CHECK(rep.reason == TerminationReason::Converged);
  CHECK(rep.residual <= cfg.tolerance);
  CHECK(records == rep.steps);
  for (Eigen::Index i = 0; i < s.positions.rows(); ++i)
    if (s.mesh.is_boundary_vertex(std::size_t(i))) CHECK(s.positions.row(i) == r0.row(i));
  CHECK(s.positions.col(2).cwiseAbs().maxCoeff() < 1e-4);
}

#include "memddg/system.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace memddg;
using namespace memddg::testing;
using Catch::Approx;

TEST_CASE("protein modulated properties") {
  MembraneParameters p;
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(3);
  auto m = protein_modulated_properties(phi, p);
  CHECK(m.kappa[0] == p.kappa_b);
  CHECK(m.curvature[0] == 0.0);
  p.kappa_c = 3.0 * p.kappa_b;
  phi.setOnes();
  CHECK(protein_modulated_properties(phi, p).kappa[1] == Approx(4.0 * p.kappa_b));
  p.curvature_c = 6.0;
  phi.setConstant(0.5);
  CHECK(protein_modulated_properties(phi, p).curvature[2] == Approx(3.0));
  phi[0] = 1.2;
  try {
    protein_modulated_properties(phi, p);
    FAIL("expected OutOfRangePhi");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::OutOfRangePhi);
  }
}

TEST_CASE("surface tension and stretching energy") {
  MembraneParameters p;
  p.K_A = 1.0;
  p.preferred_area = 2.0;
  CHECK(surface_tension(2.0, p) == 0.0);
  CHECK(surface_tension(2.02, p) == Approx(0.01));
  p.preferred_area = 1.0;
  CHECK(stretching_energy(1.1, p) == Approx(0.005));
  CHECK(stretching_energy(1.0, p) == 0.0);
  p.fixed_tension = 1e-4;
  CHECK(surface_tension(123.0, p) == 1e-4);
  CHECK(stretching_energy(3.0, p) - stretching_energy(2.0, p) == Approx(1e-4));
  MembraneParameters missing;
  missing.K_A = 1.0;
  CHECK_THROWS_AS(surface_tension(1.0, missing), Error);
}

TEST_CASE("osmotic pressure and pressure energy") {
  MembraneParameters p;
  p.pressure_law = PressureLaw::VanHoff;
  p.K_V = 0.01;
  p.concentration_ratio = 0.022;
  const double iso = 1.0 / 0.022;
  CHECK(std::abs(osmotic_pressure(iso, p)) < 1e-18);
  CHECK(osmotic_pressure(0.9 * iso, p) > 0.0);
  CHECK(osmotic_pressure(1.1 * iso, p) < 0.0);
  CHECK(pressure_energy(iso, p) == Approx(0.0).margin(1e-18));
  CHECK(pressure_energy(0.8 * iso, p) > 0.0);
  CHECK(pressure_energy(1.2 * iso, p) > 0.0);
  CHECK_THROWS_AS(osmotic_pressure(-1.0, p), Error);

  MembraneParameters q;
  q.pressure_law = PressureLaw::Phenomenological;
  q.K_V = 0.5;
  q.preferred_volume = 2.0;
  CHECK(osmotic_pressure(2.0, q) == 0.0);
  CHECK(pressure_energy(2.2, q) == Approx(0.0025));

  // Exact and phenomenological laws agree to third order near V̄ when
  // K_V^exact = K_V^phen / V̄²·V̄² (both have curvature K_V/V̄² at V̄).
  MembraneParameters exact;
  exact.pressure_law = PressureLaw::VanHoff;
  exact.K_V = 0.5;
  exact.concentration_ratio = 1.0 / 2.0;
  std::vector<double> dv{1e-1, 5e-2, 2.5e-2}, diff;
  for (double d : dv) diff.push_back(std::abs(pressure_energy(2.0 + d, exact) - pressure_energy(2.0 + d, q)));
  CHECK(loglog_slope(dv, diff) == Approx(3.0).margin(0.1));
}

TEST_CASE("bending energy of spheres") {
  MembraneParameters p;
  p.kappa_b = 1.0;
  double previous = 1e9;
  for (int s = 1; s <= 4; ++s) {
    auto m = icosphere(s);
    const double e = bending_energy(m.mesh, m.positions, Eigen::VectorXd::Zero(m.positions.rows()), p);
    const double err = std::abs(e - 4.0 * std::numbers::pi);
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous < 0.02);
  auto flat = hex_patch(1.0, 3);
  CHECK(bending_energy(flat.mesh, flat.positions, Eigen::VectorXd::Zero(flat.positions.rows()), p) == 0.0);
  // Radius 1/H̄ with matching spontaneous curvature.
  p.curvature_c = 2.0;
  double prev = 1e9;
  for (int s = 1; s <= 4; ++s) {
    auto m = icosphere(s, 0.5);
    const double e = bending_energy(m.mesh, m.positions, Eigen::VectorXd::Ones(m.positions.rows()), p);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("Dirichlet face sum equals the Laplacian quadratic form") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = noisy_icosphere(1 + trial % 3, 0.08, 100 + trial);
    const Eigen::VectorXd phi = random_field(m.mesh.n_vertices(), 0.0, 1.0, rng);
    const Geometry g = compute_geometry(m.mesh, m.positions);
    const double face_sum = dirichlet_energy(m.mesh, m.positions, g, phi, 0.3);
    const double quad = 0.5 * 0.3 * phi.dot(cotan_laplacian(m.mesh, g) * phi);
    CHECK(std::abs(face_sum - quad) <= 1e-12 * std::abs(quad));
  }
  auto m = icosphere(2);
  CHECK(dirichlet_energy(m.mesh, m.positions, Eigen::VectorXd::Constant(m.positions.rows(), 0.4),
                         MembraneParameters{.eta = 1.0}) < 1e-28);
}

TEST_CASE("Dirichlet energy of a ramp scales with interface length over width") {
  // Strip [0,2]×[0,H] on a regular grid; φ ramps from 0 to 1 across a band
  // of width w aligned with grid lines, so E = η H / (2w) exactly.
  const std::size_t nx = 40, ny = 10;
  const double height = 0.5;
  std::vector<Vec3> p;
  std::vector<Triangle> t;
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i) p.emplace_back(2.0 * i / nx, height * j / ny, 0.0);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t a = j * (nx + 1) + i;
      t.push_back({a, a + 1, a + nx + 2});
      t.push_back({a, a + nx + 2, a + nx + 1});
    }
  auto strip = make_mesh(p, t);
  for (double w : {0.4, 0.2, 0.1}) {
    Eigen::VectorXd phi(strip.positions.rows());
    for (Eigen::Index i = 0; i < phi.size(); ++i)
      phi[i] = std::clamp((strip.positions(i, 0) - 1.0) / w + 0.5, 0.0, 1.0);
    const double e = dirichlet_energy(strip.mesh, strip.positions, phi, MembraneParameters{.eta = 0.7});
    CHECK(e == Approx(0.7 * height / (2.0 * w)).epsilon(1e-12));
  }
}

TEST_CASE("adsorption energy") {
  auto m = cube();
  CHECK(adsorption_energy(m.mesh, m.positions, Eigen::VectorXd::Ones(8), MembraneParameters{.epsilon = -2.0}) ==
        Approx(-12.0));
  CHECK(adsorption_energy(m.mesh, m.positions, Eigen::VectorXd::Zero(8), MembraneParameters{.epsilon = -2.0}) == 0.0);
  // Unit-area mesh, φ = 0.1, ε = −1e-3.
  std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  auto sq = make_mesh(p, {{0, 1, 2}, {0, 2, 3}});
  CHECK(adsorption_energy(sq.mesh, sq.positions, Eigen::VectorXd::Constant(4, 0.1),
                          MembraneParameters{.epsilon = -1e-3}) == Approx(-1e-4));
}

TEST_CASE("total energy") {
  System s;
  auto patch = hex_patch(1.0, 3);
  s.mesh = patch.mesh;
  s.positions = patch.positions;
  s.phi = Eigen::VectorXd::Zero(s.positions.rows());
  s.params.K_A = 0.0;
  CHECK(total_energy(s).total == 0.0);

  auto ico = icosphere(3);
  System v;
  v.mesh = ico.mesh;
  v.positions = ico.positions;
  v.positions.col(2) *= 0.6;
  v.phi = Eigen::VectorXd::Zero(v.positions.rows());
  v.params.K_A = 1.0;
  v.params.preferred_area = 4.0 * std::numbers::pi;
  v.params.pressure_law = PressureLaw::VanHoff;
  v.params.K_V = 0.1;
  v.params.concentration_ratio = 0.3;
  const auto E = total_energy(v);
  CHECK(std::isfinite(E.total));
  CHECK(E.total == E.bending + E.stretching + E.pressure + E.dirichlet + E.adsorption + E.regularization +
                       E.external);
}

TEST_CASE("patch system totals") {
  auto patch = hex_patch(1.0, 4);
  ReservoirSpec res{true, 2.0, 4.19};
  auto t = patch_system_totals(patch.mesh, patch.positions, res);
  CHECK(t.volume == Approx(4.19));
  CHECK(t.area == Approx(total_area(patch.mesh, patch.positions) + 2.0));
  auto tb = tube(1.0, 19.9, 24, 40);
  auto tt = patch_system_totals(tb.mesh, tb.positions, ReservoirSpec{true, 0.0, 4.19});
  // Between the inscribed prism and the smooth cylinder.
  const double section = 0.5 * 24 * std::sin(2 * std::numbers::pi / 24);
  CHECK(tt.volume > section * 19.9 + 4.19);
  CHECK(tt.volume < std::numbers::pi * 19.9 + 4.19);
  VertexPositions bent = tb.positions;
  bent(0, 2) += 0.1;
  CHECK_THROWS_AS(enclosed_volume(tb.mesh, bent), Error);
}

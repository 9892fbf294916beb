#include "memddg/validation.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace memddg;
using Catch::Approx;

TEST_CASE("Gauss-Legendre quadrature integrates polynomials exactly") {
  const auto [x, w] = quadrature::gauss_legendre(8);
  double s0 = 0.0, s14 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    s0 += w[k];
    s14 += w[k] * std::pow(x[k], 14);
  }
  CHECK(s0 == Approx(2.0).epsilon(1e-15));
  CHECK(s14 == Approx(2.0 / 15.0).epsilon(1e-14));
  CHECK(quadrature::integrate([](double t) { return std::sin(t); }, 0.0, std::numbers::pi) == Approx(2.0).epsilon(1e-14));
}

TEST_CASE("spheroid closed forms agree with independent oracles") {
  for (auto [a, c] : {std::pair{1.0, 0.5}, std::pair{0.5, 1.0}, std::pair{1.3, 1.3}}) {
    INFO(a << ", " << c);
    const SpheroidReference ref{a, c};
    CHECK(spheroid_reference_discrepancy(ref) <= 1e-8);
  }
  // Sphere: H = 1/R, K = 1/R², ΔH = 0.
  const SpheroidReference sphere{2.0, 2.0};
  for (double b : {-1.2, 0.0, 0.4}) {
    CHECK(sphere.mean_curvature(b) == Approx(0.5));
    CHECK(sphere.gaussian_curvature(b) == Approx(0.25));
    CHECK(sphere.laplacian_mean_curvature(b) == Approx(0.0).margin(1e-6));
  }
  CHECK(sphere.area() == Approx(16.0 * std::numbers::pi));
  CHECK(sphere.total_mean_curvature() == Approx(8.0 * std::numbers::pi).epsilon(1e-12));
  // Oblate a = 1, c = ½: curvature radii a²/c at the pole, c²/a and a at the equator.
  const SpheroidReference oblate{1.0, 0.5};
  CHECK(oblate.mean_curvature(0.5 * std::numbers::pi) == Approx(0.5));
  CHECK(oblate.gaussian_curvature(0.5 * std::numbers::pi) == Approx(0.25));
  CHECK(oblate.mean_curvature(0.0) == Approx(2.5));
  CHECK(oblate.gaussian_curvature(0.0) == Approx(4.0));
}

TEST_CASE("spheroid Laplacian of H against a direct surface-of-revolution formula") {
  // Independent step size; agreement shows the nested difference is resolved.
  const SpheroidReference ref{1.0, 0.5};
  for (double b : {-1.0, -0.3, 0.2, 0.9}) {
    const double h = 5e-4;
    auto flux = [&](double x) {
      const double dH = (ref.mean_curvature(x + h) - ref.mean_curvature(x - h)) / (2 * h);
      return std::cos(x) / ref.speed(x) * dH;
    };
    const double coarse = (flux(b + h) - flux(b - h)) / (2 * h) / (std::cos(b) * ref.speed(b));
    CHECK(ref.laplacian_mean_curvature(b) == Approx(coarse).epsilon(1e-4));
  }
}

TEST_CASE("spheroid convergence study") {
  const std::vector<int> levels{1, 2, 3, 4, 5};
  const ConvergenceReport r = spheroid_convergence_study(levels);
  REQUIRE(r.levels.size() == 5);
  CHECK(r.reference_discrepancy <= 1e-8);
  for (std::size_t k = 1; k < r.levels.size(); ++k) CHECK(r.levels[k].h < r.levels[k - 1].h);
  for (const auto &l : r.levels) CHECK(l.total_gaussian <= 1e-9);
  CHECK(r.slopes.at("area") >= 1.7);
  CHECK(r.slopes.at("volume") >= 1.7);
  CHECK(r.slopes.at("total_mean") >= 1.7);
  CHECK(r.slopes.at("total_mean_squared") >= 1.7);
  CHECK(r.slopes.at("mean_scalar") >= 1.7);
  CHECK(r.slopes.at("gaussian_scalar") >= 1.7);
  // Biharmonic proxies are reported without a rate requirement.
  CHECK(r.slopes.count("schlafli_vector") == 1);
  CHECK(r.slopes.count("cotan_laplacian") == 1);
}

TEST_CASE("pointwise spheroid table") {
  const SpheroidReference ref{1.0, 0.5};
  const PointwiseTable t = spheroid_pointwise(3, ref);
  REQUIRE(t.rows.size() == 642);
  REQUIRE(t.columns.size() == t.rows.front().size());
  double worst_h = 0.0, area = 0.0;
  for (const auto &row : t.rows) {
    worst_h = std::max(worst_h, std::abs(row[6] - row[7]) / row[7]);
    area += row[5];
  }
  CHECK(area == Approx(ref.area()).epsilon(0.01));
  CHECK(worst_h < 0.2);
}

TEST_CASE("convergence study rejects bad level lists") {
  const std::vector<int> two{1, 2}, unsorted{1, 3, 2};
  CHECK_THROWS_AS(spheroid_convergence_study(two), Error);
  CHECK_THROWS_AS(spheroid_convergence_study(unsorted), Error);
}

namespace {

TraceSample sample(double before, double after, double area = 1.0) {
  TraceSample x;
  x.record.shape = {.step = 1.0, .energy_before = before, .energy_after = after, .backtracks = 0, .moved = true};
  x.record.area = area;
  x.record.phi_min = 0.1;
  x.record.phi_max = 0.2;
  return x;
}

const AssertionResult &find(const ScenarioReport &r, const std::string &prefix) {
  for (const auto &c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return c;
  throw std::runtime_error("no check " + prefix);
}

} // namespace

TEST_CASE("scenario assertions flag energy increases") {
  ScenarioTrace t;
  t.preset = "bud-isotonic";
  t.samples = {sample(2.0, 1.0), sample(1.0, 0.5)};
  CHECK(scenario_assertions(t).passed());
  t.samples.push_back(sample(0.5, 0.5 + 1e-15));
  const ScenarioReport r = scenario_assertions(t);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(find(r, "monotone").pass);
}

TEST_CASE("scenario assertions for vesicles check strain and convergence") {
  ScenarioTrace t;
  t.preset = "vesicle-biconcave";
  t.preferred_area = 10.0;
  t.report.reason = TerminationReason::Converged;
  t.samples = {sample(2.0, 1.0, 10.05)};
  CHECK(scenario_assertions(t).passed());
  t.samples.push_back(sample(1.0, 0.9, 10.2));
  CHECK_FALSE(find(scenario_assertions(t), "areal strain").pass);
  t.samples.pop_back();
  t.report.reason = TerminationReason::MaxSteps;
  CHECK_FALSE(find(scenario_assertions(t), "converged").pass);
}

TEST_CASE("trace recorder on a rigid translation") {
  System s;
  MeshData m = icosphere(1);
  s.mesh = std::move(m.mesh);
  s.positions = std::move(m.positions);
  s.phi = Eigen::VectorXd::Zero(s.positions.rows());
  ScenarioTrace t = begin_trace("vesicle-biconcave", s, true);
  const auto rec = trace_recorder(t);
  StepRecord r;
  rec(s, r);
  s.positions.col(0).array() += 1e-6;
  rec(s, r);
  REQUIRE(t.samples.size() == 2);
  CHECK(t.samples[1].center_of_mass.x() - t.samples[0].center_of_mass.x() == Approx(1e-6));
  const ScenarioReport rep = scenario_assertions(t);
  CHECK_FALSE(find(rep, "center-of-mass").pass);
  CHECK(find(rep, "net torque").pass); // bare bending on a sphere is torque-free
}

TEST_CASE("height ratio") {
  ScenarioTrace a, b;
  a.preset = "patch-control";
  b.preset = "patch-scaffold";
  a.samples.resize(1);
  b.samples.resize(1);
  a.samples[0].max_abs_z = 0.1;
  b.samples[0].max_abs_z = 0.25;
  CHECK(height_ratio(a, b).pass);
  b.samples[0].max_abs_z = 0.15;
  CHECK_FALSE(height_ratio(a, b).pass);
}

#pragma once

#include "memddg/generators.hpp"
#include "memddg/primitive_check.hpp"
#include "memddg/system.hpp"
#include "memddg/solver.hpp"
#include "memddg/taylor.hpp"

#include <random>

namespace memddg {

// ---------------------------------------------------------------------------
// Force exactness.

enum class TaylorTerm {
  Bending, Stretching, Pressure, Dirichlet, Adsorption, Regularization,      // shape forces
  BendingPotential, AdsorptionPotential, DirichletPotential, BarrierPotential // chemical
};

inline constexpr std::array<TaylorTerm, 10> kAllTaylorTerms{
    TaylorTerm::Bending,          TaylorTerm::Stretching,          TaylorTerm::Pressure,
    TaylorTerm::Dirichlet,        TaylorTerm::Adsorption,          TaylorTerm::Regularization,
    TaylorTerm::BendingPotential, TaylorTerm::AdsorptionPotential, TaylorTerm::DirichletPotential,
    TaylorTerm::BarrierPotential};

inline std::string to_string(TaylorTerm t) {
  switch (t) {
  case TaylorTerm::Bending: return "f_b";
  case TaylorTerm::Stretching: return "f_s";
  case TaylorTerm::Pressure: return "f_p";
  case TaylorTerm::Dirichlet: return "f_d";
  case TaylorTerm::Adsorption: return "f_a";
  case TaylorTerm::Regularization: return "f_reg";
  case TaylorTerm::BendingPotential: return "mu_b";
  case TaylorTerm::AdsorptionPotential: return "mu_a";
  case TaylorTerm::DirichletPotential: return "mu_d";
  case TaylorTerm::BarrierPotential: return "mu_barrier";
  }
  return "?";
}

inline bool is_chemical(TaylorTerm t) { return t >= TaylorTerm::BendingPotential; }

struct TaylorResult {
  TaylorTerm term;
  TaylorSweep sweep;
  bool disabled = false;     // energy, gradient and every remainder are zero
  double energy_scale = 0.0; // |total energy| of the unperturbed system

  /// Remainders sit at round-off relative to the whole system (the term is
  /// flat along the direction, e.g. E_d under uniform φ).
  bool roundoff(double rel = 1e-12) const {
    const double worst = sweep.remainder.empty() ? 0.0 : *std::max_element(sweep.remainder.begin(), sweep.remainder.end());
    return worst <= rel * energy_scale;
  }
  bool exact(double rel = 1e-12) const { return disabled || sweep.max_relative <= rel || roundoff(rel); }
};

/// Remainder |E(x+εd) − E(x) − ε⟨∇E, d⟩| of one energy term along a random
/// direction, for positions (shape forces) or φ (chemical potentials).
/// Forces are the unmasked ones.
inline TaylorResult taylor_exactness(const System &base, TaylorTerm term, std::span<const double> eps,
                                     std::mt19937_64 &rng, double barrier_strength = 1e-3) {
  System s = base;
  s.bcs = {};
  const EvaluateOptions opt{.forces = true, .potentials = true, .barrier_strength = barrier_strength};
  auto energy_of = [&](const Evaluation &ev, const System &sys) {
    switch (term) {
    case TaylorTerm::Bending:
    case TaylorTerm::BendingPotential: return ev.energy.bending;
    case TaylorTerm::Stretching: return ev.energy.stretching;
    case TaylorTerm::Pressure: return ev.energy.pressure;
    case TaylorTerm::Dirichlet:
    case TaylorTerm::DirichletPotential: return ev.energy.dirichlet;
    case TaylorTerm::Adsorption:
    case TaylorTerm::AdsorptionPotential: return ev.energy.adsorption;
    case TaylorTerm::Regularization: return ev.energy.regularization;
    case TaylorTerm::BarrierPotential: return barrier_energy(sys.phi, barrier_strength);
    }
    return 0.0;
  };
  const Evaluation ev0 = evaluate(s, opt);
  std::normal_distribution<double> normal;
  TaylorResult out{term, {}, false, std::abs(ev0.energy.total)};
  auto all_zero = [&] {
    return std::all_of(out.sweep.remainder.begin(), out.sweep.remainder.end(), [](double r) { return r == 0.0; });
  };

  if (!is_chemical(term)) {
    const VertexMatrix *f = nullptr;
    switch (term) {
    case TaylorTerm::Bending: f = &ev0.forces.bending; break;
    case TaylorTerm::Stretching: f = &ev0.forces.stretching; break;
    case TaylorTerm::Pressure: f = &ev0.forces.pressure; break;
    case TaylorTerm::Dirichlet: f = &ev0.forces.dirichlet; break;
    case TaylorTerm::Adsorption: f = &ev0.forces.adsorption; break;
    default: f = &ev0.forces.regularization; break;
    }
    // Boundary vertices of open meshes stay put: the reservoir closure
    // needs planar boundary loops.
    VertexMatrix d(s.positions.rows(), 3);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      const bool pinned = s.mesh.is_boundary_vertex(static_cast<std::size_t>(i));
      for (int c = 0; c < 3; ++c) d(i, c) = pinned ? 0.0 * normal(rng) : normal(rng);
    }
    d /= d.norm();
    const double slope = -(f->array() * d.array()).sum();
    out.sweep = taylor_sweep(
        [&](double e) {
          System moved = s;
          moved.positions += e * d;
          return energy_of(evaluate(moved, {.forces = false, .potentials = false}), moved);
        },
        slope, eps);
    out.disabled = out.sweep.f0 == 0.0 && f->norm() == 0.0 && all_zero();
  } else {
    const Eigen::VectorXd *mu = nullptr;
    switch (term) {
    case TaylorTerm::BendingPotential: mu = &ev0.potentials.bending; break;
    case TaylorTerm::AdsorptionPotential: mu = &ev0.potentials.adsorption; break;
    case TaylorTerm::DirichletPotential: mu = &ev0.potentials.dirichlet; break;
    default: mu = &ev0.potentials.barrier; break;
    }
    // Vertices closer to a bound than the largest step stay put, so the
    // sweep never leaves (0,1).
    const double reach = eps.empty() ? 0.0 : *std::max_element(eps.begin(), eps.end());
    Eigen::VectorXd d(s.phi.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double g = normal(rng);
      d[i] = s.phi[i] > reach && s.phi[i] < 1.0 - reach ? g : 0.0;
    }
    if (d.norm() > 0.0) d /= d.norm();
    const double slope = -mu->dot(d);
    out.sweep = taylor_sweep(
        [&](double e) {
          System moved = s;
          moved.phi += e * d;
          return energy_of(evaluate(moved, {.forces = false, .potentials = false}), moved);
        },
        slope, eps);
    out.disabled = out.sweep.f0 == 0.0 && mu->norm() == 0.0 && all_zero();
  }
  return out;
}

/// Randomized icosphere with heterogeneous φ and every coupling switched on,
/// used for the exactness study.
inline System taylor_test_system(int subdivisions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MeshData m = icosphere(subdivisions);
  std::uniform_real_distribution<double> noise(-0.02, 0.02), field(0.2, 0.8);
  for (Eigen::Index i = 0; i < m.positions.rows(); ++i)
    for (int c = 0; c < 3; ++c) m.positions(i, c) += noise(rng);
  System s;
  s.mesh = std::move(m.mesh);
  s.positions = std::move(m.positions);
  s.phi.resize(s.positions.rows());
  for (Eigen::Index i = 0; i < s.phi.size(); ++i) s.phi[i] = field(rng);
  MembraneParameters &p = s.params;
  p.kappa_b = 8.22e-5;
  p.kappa_c = 3.0 * p.kappa_b;
  p.curvature_c = 6.0;
  p.K_A = 1.0;
  p.preferred_area = 0.95 * total_area(s.mesh, s.positions);
  p.pressure_law = PressureLaw::VanHoff;
  p.K_V = 0.1;
  p.concentration_ratio = 1.1 / enclosed_volume(s.mesh, s.positions);
  p.epsilon = -1e-3;
  p.eta = 5e-4;
  const Geometry g = compute_geometry(s.mesh, s.positions);
  s.regularization.capture(s.mesh, g);
  // Perturb the reference so the penalties are active.
  for (double &l : s.regularization.ref_length) l *= 1.0 + noise(rng);
  for (double &a : s.regularization.ref_face_area) a *= 1.0 + noise(rng);
  for (double &c : s.regularization.ref_cross_ratio) c *= 1.0 + noise(rng);
  s.regularization.K_e = 0.1;
  s.regularization.K_f = 0.1;
  s.regularization.K_c = 0.01;
  return s;
}

// ---------------------------------------------------------------------------
// Smooth spheroid reference.

namespace quadrature {

/// Gauss–Legendre nodes and weights on [−1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[std::size_t(i)] = z;
    w[std::size_t(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Composite Gauss–Legendre over [lo, hi].
inline double integrate(const std::function<double(double)> &f, double lo, double hi, int panels = 64,
                        int order = 20) {
  static const auto rule = gauss_legendre(20);
  const auto &[x, w] = order == 20 ? rule : gauss_legendre(order);
  const double step = (hi - lo) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * step;
    for (std::size_t k = 0; k < x.size(); ++k) sum += w[k] * f(mid + 0.5 * step * x[k]);
  }
  return 0.5 * step * sum;
}

} // namespace quadrature

/// Spheroid (a cosβ cosθ, a cosβ sinθ, c sinβ) with closed-form curvatures.
/// H is the mean of the principal curvatures and positive for outward normals.
struct SpheroidReference {
  double a = 1.0, c = 0.5;

  /// √(a² sin²β + c² cos²β), the meridian speed.
  double speed(double beta) const {
    const double s = std::sin(beta), co = std::cos(beta);
    return std::sqrt(a * a * s * s + c * c * co * co);
  }
  double meridional_curvature(double beta) const {
    const double e = speed(beta);
    return a * c / (e * e * e);
  }
  double parallel_curvature(double beta) const { return c / (a * speed(beta)); }
  double mean_curvature(double beta) const { return 0.5 * (meridional_curvature(beta) + parallel_curvature(beta)); }
  double gaussian_curvature(double beta) const {
    const double e = speed(beta);
    return c * c / (e * e * e * e);
  }

  /// Surface Laplacian of H, from the metric E² dβ² + r² dθ² by nested
  /// central differences.
  double laplacian_mean_curvature(double beta) const {
    const double h = 1e-4;
    auto flux = [&](double b) {
      const double dH = (mean_curvature(b + h) - mean_curvature(b - h)) / (2.0 * h);
      return a * std::cos(b) / speed(b) * dH;
    };
    return (flux(beta + h) - flux(beta - h)) / (2.0 * h) / (a * std::cos(beta) * speed(beta));
  }

  double area() const {
    const double pi = std::numbers::pi;
    if (a == c) return 4.0 * pi * a * a;
    if (c < a) {
      const double e = std::sqrt(1.0 - c * c / (a * a));
      return 2.0 * pi * a * a + pi * c * c / e * std::log((1.0 + e) / (1.0 - e));
    }
    const double e = std::sqrt(1.0 - a * a / (c * c));
    return 2.0 * pi * a * a * (1.0 + c / (a * e) * std::asin(e));
  }
  double volume() const { return 4.0 / 3.0 * std::numbers::pi * a * a * c; }
  double total_gaussian_curvature() const { return 4.0 * std::numbers::pi; }

  /// ∫ g(β) dA by quadrature over the meridian.
  double surface_integral(const std::function<double(double)> &g) const {
    return quadrature::integrate(
        [&](double b) { return g(b) * 2.0 * std::numbers::pi * a * std::cos(b) * speed(b); },
        -0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
  }
  double total_mean_curvature() const {
    return surface_integral([&](double b) { return mean_curvature(b); });
  }
  double total_mean_curvature_squared() const {
    return surface_integral([&](double b) {
      const double H = mean_curvature(b);
      return H * H;
    });
  }

  /// Parametric latitude of a point on (or radially near) the surface.
  double latitude(const Vec3 &p) const { return std::atan2(p.z() / c, std::hypot(p.x(), p.y()) / a); }
  Vec3 normal(const Vec3 &p) const { return Vec3(p.x() / (a * a), p.y() / (a * a), p.z() / (c * c)).normalized(); }
};

/// Independent checks of the closed forms: quadrature for the totals, and
/// fundamental forms of the parametrization for the curvatures. Returns the
/// largest relative discrepancy.
inline double spheroid_reference_discrepancy(const SpheroidReference &ref) {
  const double pi = std::numbers::pi;
  const double a = ref.a, c = ref.c;
  double worst = 0.0;
  auto note = [&](double x, double oracle) {
    worst = std::max(worst, std::abs(x - oracle) / std::max(1.0, std::abs(oracle)));
  };
  const double area = quadrature::integrate(
      [&](double b) { return 2.0 * pi * a * std::cos(b) * std::sqrt(std::pow(a * std::sin(b), 2) + std::pow(c * std::cos(b), 2)); },
      -0.5 * pi, 0.5 * pi);
  note(ref.area(), area);
  // Disks of radius a cosβ stacked along z = c sinβ.
  const double volume = quadrature::integrate(
      [&](double b) { return pi * std::pow(a * std::cos(b), 2) * c * std::cos(b); }, -0.5 * pi, 0.5 * pi);
  note(ref.volume(), volume);
  note(ref.surface_integral([&](double b) { return ref.gaussian_curvature(b); }), ref.total_gaussian_curvature());

  for (int k = 1; k < 40; ++k) {
    const double b = -0.5 * pi + pi * k / 40.0, th = 0.37 * k;
    const Vec3 Xb(-a * std::sin(b) * std::cos(th), -a * std::sin(b) * std::sin(th), c * std::cos(b));
    const Vec3 Xt(-a * std::cos(b) * std::sin(th), a * std::cos(b) * std::cos(th), 0.0);
    const Vec3 Xbb(-a * std::cos(b) * std::cos(th), -a * std::cos(b) * std::sin(th), -c * std::sin(b));
    const Vec3 Xbt(a * std::sin(b) * std::sin(th), -a * std::sin(b) * std::cos(th), 0.0);
    const Vec3 Xtt(-a * std::cos(b) * std::cos(th), -a * std::cos(b) * std::sin(th), 0.0);
    const Vec3 n = -Xb.cross(Xt).normalized(); // outward
    const double E = Xb.dot(Xb), F = Xb.dot(Xt), G = Xt.dot(Xt);
    const double L = Xbb.dot(n), M = Xbt.dot(n), N = Xtt.dot(n);
    const double K = (L * N - M * M) / (E * G - F * F);
    const double H = -(E * N - 2.0 * F * M + G * L) / (2.0 * (E * G - F * F));
    note(ref.gaussian_curvature(b), K);
    note(ref.mean_curvature(b), H);
    const Vec3 p(a * std::cos(b) * std::cos(th), a * std::cos(b) * std::sin(th), c * std::sin(b));
    note(ref.latitude(p), b);
    note(ref.normal(p).dot(n), 1.0);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Spheroid convergence study.

struct ConvergenceLevel {
  int subdivisions = 0;
  std::size_t vertices = 0;
  double h = 0.0; // mean edge length, normalized so the finest level has h = 1
  // Global deviations: relative for A, V, ∫H, ∫H²; absolute for ∫K.
  double area = 0.0, volume = 0.0, total_mean = 0.0, total_mean_squared = 0.0, total_gaussian = 0.0;
  // Local L1 errors over integrated per-vertex values, divided by total area.
  double mean_scalar = 0.0, gaussian_scalar = 0.0;
  double mean_vector = 0.0, gaussian_vector = 0.0;
  double schlafli_vector = 0.0;  // Σ(H_i S⃗1 + H_j S⃗2) against −ΔH n⃗ A_i
  double cotan_laplacian = 0.0;  // (L H)_i against −ΔH A_i
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;
  std::map<std::string, double> slopes; // log-log fit over the finest three levels
  double reference_discrepancy = 0.0;

  static const std::vector<std::string> &columns() {
    static const std::vector<std::string> c{"h", "area", "volume", "total_mean", "total_mean_squared", "total_gaussian",
                                            "mean_scalar", "gaussian_scalar", "mean_vector", "gaussian_vector",
                                            "schlafli_vector", "cotan_laplacian"};
    return c;
  }
  static std::vector<double> values(const ConvergenceLevel &l) {
    return {l.h, l.area, l.volume, l.total_mean, l.total_mean_squared, l.total_gaussian, l.mean_scalar,
            l.gaussian_scalar, l.mean_vector, l.gaussian_vector, l.schlafli_vector, l.cotan_laplacian};
  }
};

/// Per-vertex discrete and smooth curvatures on one spheroid level, for
/// offline plots. Columns: vertex, x, y, z, beta, dual_area, H, H_ref, K, K_ref.
struct PointwiseTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline PointwiseTable spheroid_pointwise(int subdivisions, const SpheroidReference &ref) {
  const MeshData m = spheroid(subdivisions, ref.a, ref.c);
  const Geometry g = compute_geometry(m.mesh, m.positions);
  const VertexMeanCurvature H = vertex_mean_curvature(m.mesh, g);
  const Eigen::VectorXd K = vertex_gaussian_curvature(m.mesh, g);
  PointwiseTable t{{"vertex", "x", "y", "z", "beta", "dual_area", "H", "H_ref", "K", "K_ref"}, {}};
  for (Eigen::Index i = 0; i < m.positions.rows(); ++i) {
    const Vec3 p = m.positions.row(i).transpose();
    const double b = ref.latitude(p), A = g.vertex_dual_area[std::size_t(i)];
    t.rows.push_back({double(i), p.x(), p.y(), p.z(), b, A, H.pointwise[i], ref.mean_curvature(b), K[i] / A,
                      ref.gaussian_curvature(b)});
  }
  return t;
}

inline ConvergenceLevel spheroid_level(int subdivisions, const SpheroidReference &ref) {
  const MeshData m = spheroid(subdivisions, ref.a, ref.c);
  const HalfedgeMesh &mesh = m.mesh;
  const VertexPositions &r = m.positions;
  const Geometry g = compute_geometry(mesh, r);
  const VertexMeanCurvature H = vertex_mean_curvature(mesh, g);
  const Eigen::VectorXd K = vertex_gaussian_curvature(mesh, g);
  const CurvatureVectors cv = curvature_vectors(mesh, r, g);
  const VertexMatrix Hvec = 0.5 * CurvatureVectors::accumulate(mesh, cv.mean);
  const VertexMatrix Kvec = CurvatureVectors::accumulate(mesh, cv.gaussian);
  const SparseMatrix L = cotan_laplacian(mesh, g);
  const Eigen::VectorXd LH = L * H.pointwise;

  const auto nv = static_cast<Eigen::Index>(mesh.n_vertices());
  Eigen::VectorXd H_ref(nv), K_ref(nv), lap_ref(nv), dual(nv);
  VertexMatrix Hvec_ref(nv, 3), Kvec_ref(nv, 3), S_ref(nv, 3), S(nv, 3);
  for (Eigen::Index i = 0; i < nv; ++i) {
    const Vec3 p = r.row(i).transpose();
    const double b = ref.latitude(p), A = g.vertex_dual_area[std::size_t(i)];
    const Vec3 n = ref.normal(p);
    dual[i] = A;
    H_ref[i] = ref.mean_curvature(b) * A;
    K_ref[i] = ref.gaussian_curvature(b) * A;
    lap_ref[i] = -ref.laplacian_mean_curvature(b) * A;
    Hvec_ref.row(i) = (H_ref[i] * n).transpose();
    Kvec_ref.row(i) = (K_ref[i] * n).transpose();
    S_ref.row(i) = (-ref.laplacian_mean_curvature(b) * A * n).transpose();
    Vec3 s = Vec3::Zero();
    mesh.for_each_outgoing(std::size_t(i), [&](std::size_t hh) {
      const auto j = static_cast<Eigen::Index>(mesh.tip(hh));
      s += H.pointwise[i] * cv.schlafli1[hh] + H.pointwise[j] * cv.schlafli2[hh];
    });
    S.row(i) = s.transpose();
  }
  const double A_total = total_area(g);

  ConvergenceLevel lv;
  lv.subdivisions = subdivisions;
  lv.vertices = mesh.n_vertices();
  double edge_sum = 0.0;
  for (double l : g.edge_length) edge_sum += l;
  lv.h = edge_sum / double(g.edge_length.size());
  auto rel = [](double x, double y) { return std::abs(x - y) / std::abs(y); };
  lv.area = rel(A_total, ref.area());
  lv.volume = rel(signed_volume(mesh, r), ref.volume());
  lv.total_mean = rel(H.integrated.sum(), ref.total_mean_curvature());
  lv.total_mean_squared = rel(H.integrated.cwiseProduct(H.pointwise).sum(), ref.total_mean_curvature_squared());
  lv.total_gaussian = std::abs(K.sum() - ref.total_gaussian_curvature());
  lv.mean_scalar = l1_field_error(H.integrated, H_ref, A_total);
  lv.gaussian_scalar = l1_field_error(K, K_ref, A_total);
  lv.mean_vector = l1_field_error(Hvec, Hvec_ref, A_total);
  lv.gaussian_vector = l1_field_error(Kvec, Kvec_ref, A_total);
  lv.schlafli_vector = l1_field_error(S, S_ref, A_total);
  lv.cotan_laplacian = l1_field_error(LH, lap_ref, A_total);
  return lv;
}

/// Runs the study over the given icosphere subdivision levels (at least three,
/// strictly increasing).
inline ConvergenceReport spheroid_convergence_study(std::span<const int> subdivisions, double a = 1.0, double c = 0.5) {
  if (subdivisions.size() < 3) throw Error(ErrorCode::InvalidParams, "convergence study needs at least 3 levels");
  for (std::size_t k = 1; k < subdivisions.size(); ++k)
    if (subdivisions[k] <= subdivisions[k - 1]) throw Error(ErrorCode::InvalidParams, "levels must be strictly refining");
  const SpheroidReference ref{a, c};
  ConvergenceReport out;
  out.reference_discrepancy = spheroid_reference_discrepancy(ref);
  for (int s : subdivisions) out.levels.push_back(spheroid_level(s, ref));
  const std::size_t n = out.levels.size();
  const double finest = out.levels.back().h;
  for (auto &l : out.levels) l.h /= finest;
  const auto &cols = ConvergenceReport::columns();
  for (std::size_t col = 1; col < cols.size(); ++col) {
    std::vector<double> h, e;
    for (std::size_t k = n - 3; k < n; ++k) {
      h.push_back(out.levels[k].h);
      e.push_back(ConvergenceReport::values(out.levels[k])[col]);
    }
    // Exact rows (zero deviation) carry no slope.
    if (std::all_of(e.begin(), e.end(), [](double x) { return x > 0.0; }))
      out.slopes[cols[col]] = loglog_slope(h, e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario-level assertions over recorded runs.

struct TraceSample {
  StepRecord record;
  Vec3 center_of_mass = Vec3::Zero();
  double max_abs_z = 0.0;
  bool boundary_on_planes = true; // every boundary z equals one of the initial end planes
  double net_force = 0.0;         // ‖Σ f_i‖, when forces are tracked
  double net_torque = 0.0;        // ‖Σ r_i × f_i‖ about the center of mass
};

struct ScenarioTrace {
  std::string preset;
  double preferred_area = 0.0;
  double boundary_z_min = 0.0, boundary_z_max = 0.0;
  Vec3 initial_center = Vec3::Zero();
  bool track_forces = false;
  std::vector<TraceSample> samples;
  TerminationReport report;
};

inline Vec3 center_of_mass(const VertexPositions &r) { return r.colwise().mean().transpose(); }

/// Initializes a trace from the starting state.
inline ScenarioTrace begin_trace(const std::string &preset, const System &s, bool track_forces = false) {
  ScenarioTrace t;
  t.preset = preset;
  t.preferred_area = s.params.preferred_area;
  t.initial_center = center_of_mass(s.positions);
  t.track_forces = track_forces;
  bool any = false;
  for (std::size_t v = 0; v < s.mesh.n_vertices(); ++v) {
    if (!s.mesh.is_boundary_vertex(v)) continue;
    const double z = s.positions(Eigen::Index(v), 2);
    t.boundary_z_min = any ? std::min(t.boundary_z_min, z) : z;
    t.boundary_z_max = any ? std::max(t.boundary_z_max, z) : z;
    any = true;
  }
  return t;
}

/// Step callback appending one sample per step. Only reads the system.
inline StepCallback trace_recorder(ScenarioTrace &t) {
  return [&t](const System &s, const StepRecord &rec) {
    TraceSample x;
    x.record = rec;
    x.center_of_mass = center_of_mass(s.positions);
    x.max_abs_z = s.positions.col(2).cwiseAbs().maxCoeff();
    for (std::size_t v = 0; v < s.mesh.n_vertices(); ++v) {
      if (!s.mesh.is_boundary_vertex(v)) continue;
      const double z = s.positions(Eigen::Index(v), 2);
      if (z != t.boundary_z_min && z != t.boundary_z_max) x.boundary_on_planes = false;
    }
    if (t.track_forces) {
      const Evaluation ev = evaluate(s, {.forces = true, .potentials = false});
      const VertexMatrix &f = ev.forces.net;
      x.net_force = f.colwise().sum().norm();
      Vec3 torque = Vec3::Zero();
      for (Eigen::Index i = 0; i < f.rows(); ++i)
        torque += (s.positions.row(i).transpose() - x.center_of_mass).cross(f.row(i).transpose());
      x.net_torque = torque.norm();
    }
    t.samples.push_back(x);
  };
}

struct AssertionResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioReport {
  std::string preset;
  std::vector<AssertionResult> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AssertionResult &c) { return c.pass; });
  }
};

namespace scenario_detail {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline bool starts_with(const std::string &s, const char *prefix) { return s.rfind(prefix, 0) == 0; }

} // namespace scenario_detail

/// Every accepted line search lowers the total energy.
inline AssertionResult monotone_descent(const ScenarioTrace &t) {
  std::size_t searches = 0, bad = 0;
  double worst = 0.0;
  for (const auto &x : t.samples) {
    for (const LineSearchResult *ls : {&x.record.shape, &x.record.protein}) {
      if (!ls->moved) continue;
      ++searches;
      const double rise = ls->energy_after - ls->energy_before;
      if (rise > 0.0) {
        ++bad;
        worst = std::max(worst, rise);
      }
    }
  }
  return {"monotone descent", bad == 0 && searches > 0,
          std::to_string(searches) + " line searches, " + std::to_string(bad) + " increases (max " +
              scenario_detail::sci(worst) + ")"};
}

/// Preset-specific checks. The patch height comparison needs two runs and
/// lives in `height_ratio`.
inline ScenarioReport scenario_assertions(const ScenarioTrace &t) {
  using scenario_detail::sci;
  using scenario_detail::starts_with;
  ScenarioReport rep{t.preset, {}};
  rep.checks.push_back(monotone_descent(t));
  const bool errored = t.report.reason == TerminationReason::Error;
  rep.checks.push_back({"no solver failure", !errored, to_string(t.report.reason) + (errored ? ": " + t.report.message : "")});

  if (starts_with(t.preset, "vesicle")) {
    double worst = 0.0;
    for (const auto &x : t.samples) worst = std::max(worst, std::abs(x.record.area - t.preferred_area) / t.preferred_area);
    rep.checks.push_back({"areal strain < 1%", worst < 0.01, "max strain " + sci(worst)});
    rep.checks.push_back({"converged", t.report.reason == TerminationReason::Converged,
                          "residual " + sci(t.report.residual) + " after " + std::to_string(t.report.steps) + " steps"});
  }
  if (starts_with(t.preset, "tube")) {
    const bool held = std::all_of(t.samples.begin(), t.samples.end(), [](const TraceSample &x) { return x.boundary_on_planes; });
    rep.checks.push_back({"axial length held", held && t.boundary_z_max - t.boundary_z_min == 19.9,
                          "boundary planes z = " + sci(t.boundary_z_min) + ", " + sci(t.boundary_z_max)});
  }
  if (starts_with(t.preset, "spine")) {
    double lo = 1.0, hi = 0.0;
    for (const auto &x : t.samples) {
      lo = std::min(lo, x.record.phi_min);
      hi = std::max(hi, x.record.phi_max);
    }
    rep.checks.push_back({"phi inside (0,1)", lo > 0.0 && hi < 1.0, "range [" + sci(lo) + ", " + sci(hi) + "]"});
  }
  if (starts_with(t.preset, "bud")) {
    const bool finite = std::all_of(t.samples.begin(), t.samples.end(), [](const TraceSample &x) {
      return std::isfinite(x.record.residual_mechanical) && std::isfinite(x.record.residual_chemical) &&
             std::isfinite(x.record.energy.total);
    });
    rep.checks.push_back({"finite responses to the horizon", finite && !errored,
                          std::to_string(t.samples.size()) + " steps recorded"});
  }
  if (t.track_forces) {
    double drift = 0.0, torque = 0.0;
    Vec3 previous = t.initial_center;
    for (const auto &x : t.samples) {
      drift = std::max(drift, (x.center_of_mass - previous).norm());
      torque = std::max(torque, x.net_torque);
      previous = x.center_of_mass;
    }
    rep.checks.push_back({"center-of-mass drift <= 1e-8 per step", drift <= 1e-8, "max " + sci(drift)});
    rep.checks.push_back({"net torque <= 1e-10", torque <= 1e-10, "max " + sci(torque)});
  }
  return rep;
}

/// Final max |z| of `bud` over `reference`, required to reach `factor`.
inline AssertionResult height_ratio(const ScenarioTrace &reference, const ScenarioTrace &bud, double factor = 2.0) {
  if (reference.samples.empty() || bud.samples.empty()) return {"height ratio", false, "empty trace"};
  const double hr = reference.samples.back().max_abs_z, hb = bud.samples.back().max_abs_z;
  const double ratio = hr > 0.0 ? hb / hr : std::numeric_limits<double>::infinity();
  return {"height ratio >= " + scenario_detail::sci(factor), ratio >= factor,
          bud.preset + " " + scenario_detail::sci(hb) + " vs " + reference.preset + " " + scenario_detail::sci(hr) +
              " (ratio " + scenario_detail::sci(ratio) + ")"};
}

} // namespace memddg

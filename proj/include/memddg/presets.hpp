#pragma once

#include "memddg/mesh_io.hpp"
#include "memddg/remesh.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace memddg {

enum class MeshKind { Icosphere, Spheroid, Tube, HexPatch, Bump, File };
enum class ProteinProfile { Uniform, GeodesicDisk };
enum class RunMode { Dynamics, Minimize, Coupled };

/// Generator inputs. Fields that the chosen kind does not use are ignored.
struct MeshSpec {
  MeshKind kind = MeshKind::Icosphere;
  int subdivisions = 3;
  double radius = 1.0;       // sphere, tube and patch radius (µm)
  double axis_a = 1.0;       // spheroid equatorial semi-axis
  double axis_c = 0.5;       // spheroid polar semi-axis
  double length = 1.0;       // tube length along z
  std::size_t n_around = 16; // tube
  std::size_t n_rings = 2;   // tube
  std::size_t rings = 8;     // hexagonal patch
  double bump_height = 0.0;  // Gaussian bump on the patch
  double bump_width = 0.25;
  double target_area = 0.0;  // > 0: uniform rescale to this area (closed meshes)
  std::string path;          // File
};

struct ProteinSpec {
  ProteinProfile profile = ProteinProfile::Uniform;
  double value = 0.0;        // uniform φ₀
  double disk_radius = 0.5;  // geodesic radius (µm)
  double sharpness = 20.0;   // 1/µm
  Vec3 center = Vec3::Zero(); // the disk is centered on the nearest vertex
  bool recompute = false;    // re-evaluate the profile after every remesh pass
};

struct RegularizationSpec {
  double K_e = 0.0, K_f = 0.0, K_c = 0.0;
};

/// Everything needed to reproduce one run.
struct RunConfig {
  std::string preset; // name of the preset it was derived from, may be empty
  MeshSpec mesh;
  MembraneParameters params;
  ReservoirSpec reservoir;
  BoundaryConditions bcs;
  ProteinSpec protein;
  RegularizationSpec regularization;
  SolverConfig solver;
  RemeshConfig remesh;
  RunMode mode = RunMode::Dynamics;
  std::uint64_t seed = 0;

  void validate() const {
    params.validate();
    solver.validate();
    remesh.validate();
    if (protein.profile == ProteinProfile::Uniform && !(protein.value >= 0.0 && protein.value <= 1.0))
      throw Error(ErrorCode::InvalidParams, "protein value must lie in [0,1]");
    if (protein.profile == ProteinProfile::GeodesicDisk && (!(protein.disk_radius > 0.0) || !(protein.sharpness > 0.0)))
      throw Error(ErrorCode::InvalidParams, "geodesic disk needs radius and sharpness > 0");
    if (regularization.K_e < 0.0 || regularization.K_f < 0.0 || regularization.K_c < 0.0)
      throw Error(ErrorCode::InvalidParams, "regularization constants must be nonnegative");
  }
};

inline std::string to_string(MeshKind k) {
  switch (k) {
  case MeshKind::Icosphere: return "icosphere";
  case MeshKind::Spheroid: return "spheroid";
  case MeshKind::Tube: return "tube";
  case MeshKind::HexPatch: return "patch";
  case MeshKind::Bump: return "bump";
  case MeshKind::File: return "file";
  }
  return "?";
}

inline std::string to_string(ProteinProfile p) {
  return p == ProteinProfile::Uniform ? "uniform" : "geodesic_disk";
}

inline std::string to_string(RunMode m) {
  switch (m) {
  case RunMode::Dynamics: return "dynamics";
  case RunMode::Minimize: return "minimize";
  case RunMode::Coupled: return "coupled";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Mesh construction.

/// Hexagonal patch with z = h·exp(−ρ²/(2w²)).
inline MeshData bump_patch(double radius, std::size_t rings, double height, double width) {
  if (!(width > 0.0)) throw Error(ErrorCode::InvalidParams, "bump width must be positive");
  MeshData m = hex_patch(radius, rings);
  for (Eigen::Index i = 0; i < m.positions.rows(); ++i) {
    const double rho2 = m.positions(i, 0) * m.positions(i, 0) + m.positions(i, 1) * m.positions(i, 1);
    m.positions(i, 2) = height * std::exp(-rho2 / (2.0 * width * width));
  }
  return m;
}

inline MeshData generate_mesh(const MeshSpec &spec, Eigen::VectorXd *phi = nullptr) {
  MeshData m;
  switch (spec.kind) {
  case MeshKind::Icosphere:
    if (spec.subdivisions < 0 || spec.subdivisions > 7)
      throw Error(ErrorCode::InvalidParams, "icosphere subdivisions must lie in [0,7]");
    m = icosphere(spec.subdivisions, spec.radius);
    break;
  case MeshKind::Spheroid:
    if (spec.subdivisions < 0 || spec.subdivisions > 7)
      throw Error(ErrorCode::InvalidParams, "spheroid subdivisions must lie in [0,7]");
    m = spheroid(spec.subdivisions, spec.axis_a, spec.axis_c);
    break;
  case MeshKind::Tube: m = tube(spec.radius, spec.length, spec.n_around, spec.n_rings); break;
  case MeshKind::HexPatch: m = hex_patch(spec.radius, spec.rings); break;
  case MeshKind::Bump: m = bump_patch(spec.radius, spec.rings, spec.bump_height, spec.bump_width); break;
  case MeshKind::File: m = read_mesh(spec.path, phi); break;
  }
  if (spec.target_area > 0.0) {
    const double a = total_area(m.mesh, m.positions);
    m.positions *= std::sqrt(spec.target_area / a);
  }
  m.mesh.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Protein initialization.

inline std::size_t nearest_vertex(const VertexPositions &r, const Vec3 &p) {
  Eigen::Index best = 0;
  (r.rowwise() - p.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return static_cast<std::size_t>(best);
}

/// φ = ½(1 − tanh(s·(d − R))) with d the geodesic distance from `center`.
inline Eigen::VectorXd protein_profile_geodesic_disk(const HalfedgeMesh &mesh, const VertexPositions &r,
                                                     std::size_t center, double radius, double sharpness = 20.0) {
  const Geometry g = compute_geometry(mesh, r);
  const std::array<std::size_t, 1> src{center};
  const Eigen::VectorXd d = geodesic_distance(mesh, r, g, src);
  Eigen::VectorXd phi(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    phi[i] = std::clamp(0.5 * (1.0 - std::tanh(sharpness * (d[i] - radius))), 0.0, 1.0);
  return phi;
}

inline Eigen::VectorXd initial_protein(const System &s, const ProteinSpec &spec) {
  if (spec.profile == ProteinProfile::Uniform)
    return Eigen::VectorXd::Constant(s.positions.rows(), spec.value);
  return protein_profile_geodesic_disk(s.mesh, s.positions, nearest_vertex(s.positions, spec.center),
                                       spec.disk_radius, spec.sharpness);
}

/// Builds the initial state. A φ read from a mesh file wins over a uniform
/// initialization.
inline System build_system(const RunConfig &cfg) {
  cfg.validate();
  System s;
  Eigen::VectorXd file_phi;
  MeshData m = generate_mesh(cfg.mesh, &file_phi);
  s.mesh = std::move(m.mesh);
  s.positions = std::move(m.positions);
  s.params = cfg.params;
  s.reservoir = cfg.reservoir;
  s.bcs = cfg.bcs;
  if (file_phi.size() == s.positions.rows() && cfg.protein.profile == ProteinProfile::Uniform)
    s.phi = file_phi;
  else
    s.phi = initial_protein(s, cfg.protein);
  if (cfg.bcs.protein_dirichlet) {
    for (std::size_t v = 0; v < s.mesh.n_vertices(); ++v)
      if (s.mesh.is_boundary_vertex(v)) s.phi[Eigen::Index(v)] = *cfg.bcs.protein_dirichlet;
  }
  s.regularization.K_e = cfg.regularization.K_e;
  s.regularization.K_f = cfg.regularization.K_f;
  s.regularization.K_c = cfg.regularization.K_c;
  if (s.regularization.active()) s.regularization.capture(s.mesh, compute_geometry(s.mesh, s.positions));
  return s;
}

// ---------------------------------------------------------------------------
// Presets.

inline constexpr double kBareBendingRigidity = 8.22e-5; // µm·nN

inline const std::vector<std::string> &preset_names() {
  static const std::vector<std::string> names{
      "vesicle-biconcave", "vesicle-prolate", "tube-low-osmolarity", "tube-mid-osmolarity",
      "tube-high-osmolarity", "tube-high-tension", "patch-control", "patch-scaffold",
      "patch-line-tension", "spine-protein", "bud-hypertonic", "bud-isotonic", "bud-hypotonic"};
  return names;
}

namespace preset_detail {

/// Concentration ratio whose isotonic volume is a fraction `v` of the sphere
/// with area Ā.
inline double concentration_for_reduced_volume(double area, double v) {
  const double R = std::sqrt(area / (4.0 * std::numbers::pi));
  return 1.0 / (v * 4.0 / 3.0 * std::numbers::pi * R * R * R);
}

inline RunConfig vesicle(bool oblate) {
  RunConfig c;
  c.mesh.kind = MeshKind::Spheroid;
  c.mesh.subdivisions = 3;
  c.mesh.axis_a = oblate ? 1.0 : 0.5;
  c.mesh.axis_c = oblate ? 0.5 : 1.0;
  c.mesh.target_area = 4.0 * std::numbers::pi;
  c.params.kappa_b = kBareBendingRigidity;
  c.params.K_A = 10.0;
  c.params.preferred_area = 4.0 * std::numbers::pi;
  c.params.pressure_law = PressureLaw::VanHoff;
  c.params.K_V = 0.1;
  c.params.concentration_ratio = concentration_for_reduced_volume(c.params.preferred_area, oblate ? 0.6 : 0.72);
  if (!oblate) {
    // Homogeneous spontaneous curvature through φ ≡ 1.
    c.params.curvature_c = 1.0;
    c.protein.value = 1.0;
  }
  c.regularization.K_c = 1e-5;
  c.solver.dt_init = 1.0;
  c.solver.tolerance = 1e-6;
  c.solver.max_steps = 20000;
  c.solver.barrier_strength = 0.0;
  c.mode = RunMode::Minimize;
  return c;
}

inline RunConfig tube(double concentration, double tension) {
  RunConfig c;
  c.mesh.kind = MeshKind::Tube;
  c.mesh.radius = 1.0;
  c.mesh.length = 19.9;
  c.mesh.n_around = 16;
  // Ring spacing close to the equilateral height of the circumferential edge.
  const double edge = 2.0 * std::sin(std::numbers::pi / 16.0);
  c.mesh.n_rings = static_cast<std::size_t>(std::lround(19.9 / (edge * std::sqrt(3.0) / 2.0))) + 1;
  c.params.kappa_b = kBareBendingRigidity;
  c.params.curvature_c = 1.0;
  c.protein.value = 1.0;
  c.params.fixed_tension = tension;
  c.params.pressure_law = PressureLaw::VanHoff;
  c.params.K_V = 0.01;
  c.params.concentration_ratio = concentration;
  c.reservoir = {.enabled = true, .area = 0.0, .volume = 4.19};
  c.bcs.shape = {BoundaryKind::Roller, Vec3::UnitZ()};
  c.regularization.K_c = 1e-5;
  c.solver.dt_init = 1.0;
  c.solver.dt_max = 100.0;
  c.solver.max_steps = 1500;
  c.solver.tolerance = 1e-8;
  c.solver.barrier_strength = 0.0;
  c.solver.remesh_period = 50;
  c.mode = RunMode::Dynamics;
  return c;
}

inline RunConfig patch(double kappa_ratio, double eta) {
  RunConfig c;
  c.mesh.kind = MeshKind::HexPatch;
  c.mesh.radius = 1.0;
  c.mesh.rings = 12;
  c.params.kappa_b = kBareBendingRigidity;
  c.params.kappa_c = kappa_ratio * kBareBendingRigidity;
  c.params.curvature_c = 6.0;
  c.params.eta = eta;
  c.params.fixed_tension = 1e-7;
  c.bcs.shape = {BoundaryKind::Fixed, Vec3::UnitZ()};
  c.protein.profile = ProteinProfile::GeodesicDisk;
  c.protein.disk_radius = 0.5;
  c.protein.sharpness = 20.0;
  c.protein.recompute = true;
  c.remesh.shift = true;
  c.solver.dt_init = 1.0;
  c.solver.dt_max = 100.0;
  c.solver.max_steps = 3000;
  c.solver.tolerance = 1e-9;
  c.solver.barrier_strength = 0.0;
  c.solver.remesh_period = 10;
  c.mode = RunMode::Dynamics;
  return c;
}

inline RunConfig spine() {
  RunConfig c;
  c.mesh.kind = MeshKind::Bump;
  c.mesh.radius = 1.0;
  c.mesh.rings = 16;
  c.mesh.bump_height = 0.8;
  c.mesh.bump_width = 0.2;
  c.params.kappa_b = kBareBendingRigidity;
  c.params.kappa_c = 0.0;
  c.params.curvature_c = 10.0;
  c.params.mobility = 3.0;
  c.params.eta = 0.01;
  c.params.epsilon = 0.0;
  c.protein.value = 0.1;
  c.bcs.shape = {BoundaryKind::Fixed, Vec3::UnitZ()};
  c.bcs.protein_dirichlet = 0.1;
  c.solver.freeze_shape = true;
  c.solver.dt_init = 0.1;
  c.solver.dt_max = 20.0;
  c.solver.max_steps = 1000;
  c.solver.tolerance = 1e-9;
  c.solver.barrier_strength = 1e-7;
  c.mode = RunMode::Coupled;
  return c;
}

inline RunConfig bud(double preferred_volume) {
  RunConfig c;
  c.mesh.kind = MeshKind::Icosphere;
  c.mesh.subdivisions = 3;
  c.mesh.radius = 1.0;
  c.mesh.target_area = 4.0 * std::numbers::pi;
  c.params.kappa_b = kBareBendingRigidity;
  c.params.kappa_c = 0.0;
  c.params.curvature_c = 10.0;
  c.params.K_A = 1.0;
  c.params.preferred_area = 4.0 * std::numbers::pi;
  c.params.pressure_law = PressureLaw::Phenomenological;
  c.params.K_V = 0.5;
  c.params.preferred_volume = preferred_volume;
  c.params.mobility = 3.0;
  c.params.epsilon = -1e-3;
  c.params.eta = 0.1;
  c.protein.value = 0.1;
  c.regularization.K_c = 1e-5;
  c.solver.dt_init = 0.01;
  c.solver.dt_max = 1.0;
  c.solver.max_steps = 2000;
  c.solver.tolerance = 1e-9;
  c.solver.barrier_strength = 1e-7;
  c.solver.remesh_period = 50;
  c.mode = RunMode::Coupled;
  return c;
}

} // namespace preset_detail

inline RunConfig make_preset(std::string_view name) {
  using namespace preset_detail;
  RunConfig c;
  if (name == "vesicle-biconcave") c = vesicle(true);
  else if (name == "vesicle-prolate") c = vesicle(false);
  else if (name == "tube-low-osmolarity") c = tube(0.022, 1e-7);
  else if (name == "tube-mid-osmolarity") c = tube(0.030, 1e-7);
  else if (name == "tube-high-osmolarity") c = tube(0.051, 1e-7);
  else if (name == "tube-high-tension") c = tube(0.022, 1e-4);
  else if (name == "patch-control") c = patch(1.0, 0.0);
  else if (name == "patch-scaffold") c = patch(3.0, 0.0);
  else if (name == "patch-line-tension") c = patch(1.0, 5e-4);
  else if (name == "spine-protein") c = spine();
  else if (name == "bud-hypertonic") c = bud(2.91);
  else if (name == "bud-isotonic") c = bud(3.95);
  else if (name == "bud-hypotonic") c = bud(4.99);
  else throw Error(ErrorCode::UnknownPreset, "unknown preset '" + std::string(name) + "'");
  c.preset = std::string(name);
  return c;
}

// ---------------------------------------------------------------------------
// Driver.

struct RunOutcome {
  TerminationReport report;
  std::vector<RemeshReport> remesh_reports;
};

/// Runs `s` as configured. Static geodesic profiles are refreshed after each
/// remesh pass.
inline RunOutcome run_configured(System &s, const RunConfig &cfg, const StepCallback &on_step = {},
                                 MutationLog *log = nullptr) {
  RunOutcome out;
  RemeshHook hook;
  if (cfg.solver.remesh_period > 0) {
    hook = [&, remesh = cfg.remesh](System &sys) {
      out.remesh_reports.push_back(remesh_pass(sys, remesh, log));
      if (cfg.protein.recompute && cfg.protein.profile == ProteinProfile::GeodesicDisk)
        sys.phi = initial_protein(sys, cfg.protein);
    };
  }
  if (cfg.mode == RunMode::Minimize) {
    out.report = conjugate_gradient_minimize(s, cfg.solver, on_step, hook);
  } else {
    SolverConfig solver = cfg.solver;
    System &sys = s;
    if (cfg.mode == RunMode::Dynamics && sys.params.mobility > 0.0) {
      // Pure shape dynamics: φ stays as initialized.
      const double B = sys.params.mobility;
      sys.params.mobility = 0.0;
      out.report = run_dynamics(sys, solver, on_step, hook);
      sys.params.mobility = B;
    } else {
      out.report = run_dynamics(sys, solver, on_step, hook);
    }
  }
  return out;
}

} // namespace memddg

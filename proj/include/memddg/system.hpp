#pragma once

#include "memddg/forces.hpp"

#include <set>

namespace memddg {

enum class BoundaryKind {
  Free,   // no constraint
  Roller, // boundary vertices lose the component along `axis`
  Pinned, // boundary vertices do not move
  Fixed,  // the three outermost vertex rings do not move
};

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::Free;
  Vec3 axis = Vec3::UnitZ();
};

struct BoundaryConditions {
  BoundaryCondition shape;                // applied to every loop...
  std::vector<BoundaryCondition> per_loop; // ...unless given per loop
  std::optional<double> protein_dirichlet; // φ held at this value on boundary vertices
};

/// Membrane state plus everything needed to evaluate it.
struct System {
  HalfedgeMesh mesh;
  VertexPositions positions;
  Eigen::VectorXd phi;
  double time = 0.0;
  MembraneParameters params;
  ReservoirSpec reservoir;
  BoundaryConditions bcs;
  Regularization regularization;
  VertexMatrix external_force; // empty means zero
};

inline SystemTotals patch_system_totals(const HalfedgeMesh &mesh, const VertexPositions &r,
                                        const Geometry &g, const ReservoirSpec &reservoir,
                                        bool need_volume = true) {
  SystemTotals t;
  t.area = total_area(g);
  if (need_volume) t.volume = enclosed_volume(mesh, r);
  if (reservoir.enabled) {
    t.area += reservoir.area;
    t.volume += reservoir.volume;
  }
  return t;
}

inline SystemTotals patch_system_totals(const HalfedgeMesh &mesh, const VertexPositions &r,
                                        const ReservoirSpec &reservoir) {
  return patch_system_totals(mesh, r, compute_geometry(mesh, r), reservoir);
}

// ---------------------------------------------------------------------------
// Boundary masks.

struct BoundaryMask {
  std::vector<Vec3> roller_axis;  // zero vector when no roller
  std::vector<bool> immobile;
  std::vector<bool> protein_fixed;
  bool empty = true;
};

inline BoundaryMask build_boundary_mask(const HalfedgeMesh &mesh, const BoundaryConditions &bcs) {
  const std::size_t nv = mesh.n_vertices();
  BoundaryMask mask;
  mask.roller_axis.assign(nv, Vec3::Zero());
  mask.immobile.assign(nv, false);
  mask.protein_fixed.assign(nv, false);
  const auto loops = mesh.boundary_loop_vertices();
  if (loops.empty()) return mask;
  if (!bcs.per_loop.empty() && bcs.per_loop.size() != loops.size()) {
    throw Error(ErrorCode::UnassignedLoop, std::to_string(loops.size()) + " boundary loops but " +
                                               std::to_string(bcs.per_loop.size()) + " conditions");
  }
  for (std::size_t k = 0; k < loops.size(); ++k) {
    const BoundaryCondition &bc = bcs.per_loop.empty() ? bcs.shape : bcs.per_loop[k];
    switch (bc.kind) {
    case BoundaryKind::Free: break;
    case BoundaryKind::Roller:
      for (std::size_t v : loops[k]) mask.roller_axis[v] = bc.axis.normalized();
      mask.empty = false;
      break;
    case BoundaryKind::Pinned:
      for (std::size_t v : loops[k]) mask.immobile[v] = true;
      mask.empty = false;
      break;
    case BoundaryKind::Fixed: {
      std::set<std::size_t> ring(loops[k].begin(), loops[k].end()), seen = ring;
      for (int layer = 0; layer < 3; ++layer) {
        std::set<std::size_t> next;
        for (std::size_t v : ring) {
          mask.immobile[v] = true;
          mesh.for_each_outgoing(v, [&](std::size_t h) {
            if (seen.insert(mesh.tip(h)).second) next.insert(mesh.tip(h));
          });
        }
        ring = std::move(next);
      }
      mask.empty = false;
      break;
    }
    }
    if (bcs.protein_dirichlet) {
      for (std::size_t v : loops[k]) mask.protein_fixed[v] = true;
      mask.empty = false;
    }
  }
  return mask;
}

inline void apply_mask(VertexMatrix &f, const BoundaryMask &mask) {
  if (mask.empty) return;
  for (Eigen::Index v = 0; v < f.rows(); ++v) {
    const auto i = static_cast<std::size_t>(v);
    if (mask.immobile[i]) {
      f.row(v).setZero();
    } else if (mask.roller_axis[i].squaredNorm() > 0.0) {
      const Vec3 a = mask.roller_axis[i];
      int axis = -1;
      for (int c = 0; c < 3; ++c)
        if (std::abs(a[c]) == 1.0) axis = c;
      // Coordinate axes get an exact zero; other directions are projected out.
      if (axis >= 0) f(v, axis) = 0.0;
      else f.row(v) -= f.row(v).dot(a.transpose()) * a.transpose();
    }
  }
}

inline void apply_mask(Eigen::VectorXd &mu, const BoundaryMask &mask) {
  if (mask.empty) return;
  for (Eigen::Index v = 0; v < mu.size(); ++v)
    if (mask.protein_fixed[static_cast<std::size_t>(v)]) mu[v] = 0.0;
}

/// Masks every component and recomputes the totals.
inline void apply_boundary_masks(ForceBreakdown &forces, ChemicalPotential &potentials,
                                 const BoundaryMask &mask) {
  for (VertexMatrix *m : {&forces.bending, &forces.stretching, &forces.pressure, &forces.dirichlet,
                          &forces.adsorption, &forces.regularization, &forces.external})
    apply_mask(*m, mask);
  forces.sum();
  if (potentials.net.size() > 0) {
    for (Eigen::VectorXd *v : {&potentials.bending, &potentials.adsorption, &potentials.dirichlet,
                               &potentials.barrier})
      apply_mask(*v, mask);
    potentials.sum();
  }
}

// ---------------------------------------------------------------------------
// Evaluation.

struct Evaluation {
  EnergyBreakdown energy;
  ForceBreakdown forces;
  ChemicalPotential potentials;
  double area = 0.0;    // including reservoir
  double volume = 0.0;  // including reservoir; 0 when not needed
  double tension = 0.0;
  double pressure = 0.0;
};

struct EvaluateOptions {
  bool forces = true;
  bool potentials = true;
  double barrier_strength = 0.0;
};

inline bool needs_volume(const MembraneParameters &p) { return p.pressure_law != PressureLaw::None; }

/// Energies, masked forces and masked chemical potentials of a system.
inline Evaluation evaluate(const System &s, const EvaluateOptions &opt = {}) {
  const HalfedgeMesh &mesh = s.mesh;
  const VertexPositions &r = s.positions;
  const MembraneParameters &p = s.params;
  const std::size_t nv = mesh.n_vertices();
  if (s.phi.size() != static_cast<Eigen::Index>(nv))
    throw Error(ErrorCode::LengthMismatch, "phi has " + std::to_string(s.phi.size()) + " entries for " +
                                               std::to_string(nv) + " vertices");
  const Geometry g = compute_geometry(mesh, r);
  const Eigen::VectorXd phi = clamp_phi(s.phi);
  const ProteinModulation mod = protein_modulated_properties(phi, p);
  const VertexMeanCurvature H = vertex_mean_curvature(mesh, g);

  Evaluation out;
  const SystemTotals totals = patch_system_totals(mesh, r, g, s.reservoir, needs_volume(p));
  out.area = totals.area;
  out.volume = totals.volume;
  out.tension = surface_tension(out.area, p);
  out.pressure = osmotic_pressure(out.volume, p);

  EnergyBreakdown &E = out.energy;
  E.bending = bending_energy(g, H, mod);
  E.stretching = stretching_energy(out.area, p);
  E.pressure = pressure_energy(out.volume, p);
  E.dirichlet = dirichlet_energy(mesh, r, g, phi, p.eta);
  E.adsorption = adsorption_energy(g, phi, p.epsilon);
  const RegularizationResult reg = regularization_forces(mesh, r, g, s.regularization);
  E.regularization = reg.energy;
  const bool has_external = s.external_force.rows() == static_cast<Eigen::Index>(nv);
  if (has_external) E.external = -(s.external_force.array() * r.array()).sum();
  E.sum();

  if (!opt.forces && !opt.potentials) return out;
  const BoundaryMask mask = build_boundary_mask(mesh, s.bcs);
  const CurvatureVectors cv = curvature_vectors(mesh, r, g);

  if (opt.forces) {
    ForceBreakdown &F = out.forces;
    F.resize(nv);
    F.bending = bending_force(mesh, cv, H, mod);
    if (out.tension != 0.0)
      F.stretching = capillary_force(CurvatureVectors::accumulate(mesh, cv.mean), out.tension);
    if (out.pressure != 0.0) F.pressure = osmotic_force(volume_gradient(mesh, r, g), out.pressure);
    F.dirichlet = line_tension_force(mesh, r, g, phi, p.eta);
    F.adsorption = adsorption_force(mesh, cv, phi, p.epsilon);
    F.regularization = reg.force;
    if (has_external) F.external = s.external_force;
  }
  if (opt.potentials) {
    ChemicalPotential &M = out.potentials;
    M.resize(nv);
    M.bending = bending_potential(g, H, mod, p);
    M.adsorption = adsorption_potential(g, p.epsilon);
    if (p.eta != 0.0) M.dirichlet = dirichlet_potential(cotan_laplacian(mesh, g), phi, p.eta);
    M.barrier = barrier_potential(phi, opt.barrier_strength);
  }
  if (opt.forces) out.forces.sum();
  if (opt.potentials) out.potentials.sum();
  apply_boundary_masks(out.forces, out.potentials, mask);
  return out;
}

inline EnergyBreakdown total_energy(const System &s) {
  return evaluate(s, {.forces = false, .potentials = false}).energy;
}

} // namespace memddg

#pragma once

#include "memddg/operators.hpp"

#include <cmath>
#include <iostream>
#include <optional>

namespace memddg {

enum class PressureLaw {
  None,
  VanHoff,          // E_p = K_V [r_c − ln r_c − 1], r_c = (c̄/n) V
  Phenomenological, // E_p = ½ K_V (V − V̄)² / V̄²
};

/// Physical constants. Units: µm, nN, s; energies in µm·nN.
struct MembraneParameters {
  double kappa_b = 8.22e-5;     // bare bending rigidity (µm·nN)
  double kappa_c = 0.0;         // rigidity added per unit φ (µm·nN)
  double curvature_c = 0.0;     // spontaneous curvature per unit φ, H̄_c (1/µm)
  double K_A = 0.0;             // stretching modulus (nN/µm)
  double preferred_area = 0.0;  // Ā (µm²); 0 = not set
  std::optional<double> fixed_tension; // λ (nN/µm), overrides the elastic law
  PressureLaw pressure_law = PressureLaw::None;
  double K_V = 0.0;                 // iRTn (µm·nN)
  double concentration_ratio = 0.0; // c̄/n (1/µm³), van 't Hoff law
  double preferred_volume = 0.0;    // V̄ (µm³), phenomenological law
  double epsilon = 0.0;  // adsorption energy constant (µm·nN)
  double eta = 0.0;      // Dirichlet constant (µm·nN)
  double xi = 1.0;       // drag (nN·s/µm)
  double mobility = 0.0; // B (1/(nN·µm·s))

  void validate() const {
    auto bad = [](const std::string &what) { throw Error(ErrorCode::InvalidParams, what); };
    if (!(kappa_b > 0.0)) bad("kappa_b must be positive");
    if (K_A < 0.0) bad("K_A must be nonnegative");
    if (eta < 0.0) bad("eta must be nonnegative");
    if (!(xi > 0.0)) bad("xi must be positive");
    if (mobility < 0.0) bad("mobility must be nonnegative");
    if (K_V < 0.0) bad("K_V must be nonnegative");
    if (pressure_law == PressureLaw::VanHoff && !(concentration_ratio > 0.0))
      bad("van 't Hoff pressure needs concentration_ratio > 0");
    if (pressure_law == PressureLaw::Phenomenological && !(preferred_volume > 0.0))
      bad("phenomenological pressure needs preferred_volume > 0");
  }
};

/// Implicit membrane reservoir attached to an open patch.
struct ReservoirSpec {
  bool enabled = false;
  double area = 0.0;   // A_r (µm²)
  double volume = 0.0; // V_r (µm³)
};

struct EnergyBreakdown {
  double bending = 0.0;        // E_b
  double stretching = 0.0;     // E_s
  double pressure = 0.0;       // E_p
  double dirichlet = 0.0;      // E_d
  double adsorption = 0.0;     // E_a
  double regularization = 0.0; // penalty energies of the regularization springs
  double external = 0.0;       // −Σ f_ext · r
  double total = 0.0;

  void sum() {
    total = bending + stretching + pressure + dirichlet + adsorption + regularization + external;
  }
};

// ---------------------------------------------------------------------------
// Constitutive laws.

struct ProteinModulation {
  Eigen::VectorXd kappa;     // κ_i = κ_b + κ_c φ_i
  Eigen::VectorXd curvature; // H̄_i = H̄_c φ_i
};

inline void require_phi_in_range(const Eigen::VectorXd &phi) {
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (!(phi[i] >= 0.0 && phi[i] <= 1.0)) {
      throw Error(ErrorCode::OutOfRangePhi,
                  "phi[" + std::to_string(i) + "] = " + std::to_string(phi[i]));
    }
  }
}

/// φ clamped to [0, 1]; warns once per call when clamping happened.
inline Eigen::VectorXd clamp_phi(const Eigen::VectorXd &phi, bool warn = true) {
  Eigen::VectorXd out = phi.cwiseMax(0.0).cwiseMin(1.0);
  if (warn && (out - phi).cwiseAbs().maxCoeff() > 0.0) {
    std::cerr << "memddg: warning: protein density clamped to [0, 1]\n";
  }
  return out;
}

inline ProteinModulation protein_modulated_properties(const Eigen::VectorXd &phi,
                                                      const MembraneParameters &p) {
  require_phi_in_range(phi);
  return {(p.kappa_b + p.kappa_c * phi.array()).matrix(), (p.curvature_c * phi.array()).matrix()};
}

/// Area and volume of the whole system (patch plus reservoir).
struct SystemTotals {
  double area = 0.0;
  double volume = 0.0;
};

inline double preferred_area_or_throw(const MembraneParameters &p) {
  if (!(p.preferred_area > 0.0)) {
    throw Error(ErrorCode::MissingPreferredArea, "preferred_area must be set and positive");
  }
  return p.preferred_area;
}

/// λ = K_A (A − Ā)/Ā, or the prescribed tension.
inline double surface_tension(double area, const MembraneParameters &p) {
  if (p.fixed_tension) return *p.fixed_tension;
  if (p.K_A == 0.0) return 0.0;
  const double a0 = preferred_area_or_throw(p);
  return p.K_A * (area - a0) / a0;
}

inline double stretching_energy(double area, const MembraneParameters &p) {
  if (p.fixed_tension) {
    return *p.fixed_tension * (area - (p.preferred_area > 0.0 ? p.preferred_area : 0.0));
  }
  if (p.K_A == 0.0) return 0.0;
  const double a0 = preferred_area_or_throw(p);
  return 0.5 * p.K_A * (area - a0) * (area - a0) / a0;
}

inline void require_positive_volume(double volume) {
  if (!(volume > 0.0)) {
    throw Error(ErrorCode::NonPositiveVolume, "volume " + std::to_string(volume));
  }
}

/// ΔP = P_in − P_out (nN/µm²).
inline double osmotic_pressure(double volume, const MembraneParameters &p) {
  switch (p.pressure_law) {
  case PressureLaw::None: return 0.0;
  case PressureLaw::VanHoff:
    require_positive_volume(volume);
    // iRT (n/V − c̄) with iRT = K_V/n.
    return p.K_V * (1.0 / volume - p.concentration_ratio);
  case PressureLaw::Phenomenological:
    require_positive_volume(volume);
    return -p.K_V * (volume - p.preferred_volume) /
           (p.preferred_volume * p.preferred_volume);
  }
  return 0.0;
}

inline double pressure_energy(double volume, const MembraneParameters &p) {
  switch (p.pressure_law) {
  case PressureLaw::None: return 0.0;
  case PressureLaw::VanHoff: {
    require_positive_volume(volume);
    const double rc = p.concentration_ratio * volume;
    return p.K_V * (rc - std::log(rc) - 1.0);
  }
  case PressureLaw::Phenomenological: {
    require_positive_volume(volume);
    const double dv = volume - p.preferred_volume;
    return 0.5 * p.K_V * dv * dv / (p.preferred_volume * p.preferred_volume);
  }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Shape energies.

/// Σ_i κ_i (∫H_i − A_i H̄_i)² / A_i. The Gaussian-modulus term is constant
/// for fixed topology and is not included.
inline double bending_energy(const Geometry &g, const VertexMeanCurvature &H,
                             const ProteinModulation &mod) {
  std::vector<double> parts(g.vertex_dual_area.size(), 0.0);
  parallel_for(parts.size(), [&](std::size_t v) {
    const auto i = static_cast<Eigen::Index>(v);
    const double a = g.vertex_dual_area[v];
    if (a <= 0.0) return;
    const double diff = H.integrated[i] - a * mod.curvature[i];
    parts[v] = mod.kappa[i] * diff * diff / a;
  });
  return pairwise_sum(parts);
}

inline double bending_energy(const HalfedgeMesh &mesh, const VertexPositions &r,
                             const Eigen::VectorXd &phi, const MembraneParameters &p) {
  const Geometry g = compute_geometry(mesh, r);
  return bending_energy(g, vertex_mean_curvature(mesh, g),
                        protein_modulated_properties(clamp_phi(phi), p));
}

/// (η/2) Σ_f A_f ‖∇φ_f‖², from the face gradients.
inline double dirichlet_energy(const HalfedgeMesh &mesh, const VertexPositions &r,
                               const Geometry &g, const Eigen::VectorXd &phi, double eta) {
  if (eta == 0.0) return 0.0;
  const auto grad = face_surface_gradient(mesh, r, g, phi);
  std::vector<double> parts(mesh.n_faces());
  for (std::size_t f = 0; f < mesh.n_faces(); ++f)
    parts[f] = g.face_area[f] * grad[f].squaredNorm();
  return 0.5 * eta * pairwise_sum(parts);
}

inline double dirichlet_energy(const HalfedgeMesh &mesh, const VertexPositions &r,
                               const Eigen::VectorXd &phi, const MembraneParameters &p) {
  return dirichlet_energy(mesh, r, compute_geometry(mesh, r), phi, p.eta);
}

/// ε Σ_i A_i φ_i.
inline double adsorption_energy(const Geometry &g, const Eigen::VectorXd &phi, double epsilon) {
  if (epsilon == 0.0) return 0.0;
  std::vector<double> parts(g.vertex_dual_area.size());
  for (std::size_t v = 0; v < parts.size(); ++v)
    parts[v] = g.vertex_dual_area[v] * phi[static_cast<Eigen::Index>(v)];
  return epsilon * pairwise_sum(parts);
}

inline double adsorption_energy(const HalfedgeMesh &mesh, const VertexPositions &r,
                                const Eigen::VectorXd &phi, const MembraneParameters &p) {
  return adsorption_energy(compute_geometry(mesh, r), phi, p.epsilon);
}

} // namespace memddg

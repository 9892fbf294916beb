#pragma once

#include "memddg/energy.hpp"

namespace memddg {

/// Per-vertex integrated forces (nN) by physics term.
struct ForceBreakdown {
  VertexMatrix bending;        // f_b
  VertexMatrix stretching;     // f_s, capillary
  VertexMatrix pressure;       // f_p, osmotic
  VertexMatrix dirichlet;      // f_d, line tension
  VertexMatrix adsorption;     // f_a
  VertexMatrix regularization; // f_reg
  VertexMatrix external;       // f_ext
  VertexMatrix net;

  void resize(std::size_t n) {
    const auto rows = static_cast<Eigen::Index>(n);
    for (VertexMatrix *m : {&bending, &stretching, &pressure, &dirichlet, &adsorption,
                            &regularization, &external, &net})
      *m = VertexMatrix::Zero(rows, 3);
  }
  void sum() {
    net = bending + stretching + pressure + dirichlet + adsorption + regularization + external;
  }
};

/// Per-vertex integrated chemical potentials (µm·nN).
struct ChemicalPotential {
  Eigen::VectorXd bending, adsorption, dirichlet, barrier, net;

  void resize(std::size_t n) {
    const auto rows = static_cast<Eigen::Index>(n);
    for (Eigen::VectorXd *v : {&bending, &adsorption, &dirichlet, &barrier, &net})
      *v = Eigen::VectorXd::Zero(rows);
  }
  void sum() { net = bending + adsorption + dirichlet + barrier; }
};

// ---------------------------------------------------------------------------
// Volume gradient.

/// ∇V for every vertex. Closed meshes use ∫n⃗_i = (1/3) Σ_fan A_f n⃗_f. Each
/// boundary loop is closed by a fan around its centroid; the cap faces add
/// their own (1/3) A n⃗ terms and the apex gradient is shared equally by the
/// loop vertices.
inline VertexMatrix volume_gradient(const HalfedgeMesh &mesh, const VertexPositions &r,
                                    const Geometry &g) {
  VertexMatrix grad = vertex_volume_normal(mesh, g);
  for (const auto &loop : mesh.boundary_loop_vertices()) {
    Vec3 c = Vec3::Zero();
    for (std::size_t v : loop) c += row(r, v);
    c /= static_cast<double>(loop.size());
    Vec3 apex = Vec3::Zero();
    for (std::size_t k = 0; k < loop.size(); ++k) {
      const std::size_t a = loop[k], b = loop[(k + 1) % loop.size()];
      // Cap triangle (c, a, b); (1/3)·A·n = (1/6)·(a − c) × (b − c).
      const Vec3 an = (row(r, a) - c).cross(row(r, b) - c) / 6.0;
      grad.row(static_cast<Eigen::Index>(a)) += an.transpose();
      grad.row(static_cast<Eigen::Index>(b)) += an.transpose();
      apex += an;
    }
    for (std::size_t v : loop)
      grad.row(static_cast<Eigen::Index>(v)) += (apex / static_cast<double>(loop.size())).transpose();
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Shape forces.

/// ∫f⃗_p = ΔP ∇V.
inline VertexMatrix osmotic_force(const VertexMatrix &volume_grad, double pressure) {
  return pressure * volume_grad;
}

/// ∫f⃗_s = −λ ∫2H⃗.
inline VertexMatrix capillary_force(const VertexMatrix &mean_curvature_vector, double tension) {
  return -tension * mean_curvature_vector;
}

/// Exact bending force, as a sum over outgoing halfedges i→j of
///   −[κ_i(H_i−H̄_i) + κ_j(H_j−H̄_j)] ∫K⃗_ij
///   + [⅓κ_i(H_i−H̄_i)(H_i+H̄_i) + ⅔κ_j(H_j−H̄_j)(H_j+H̄_j)] ∫2H⃗_ij
///   − [κ_i(H_i−H̄_i) ∫S⃗_ij,1 + κ_j(H_j−H̄_j) ∫S⃗_ij,2].
/// Valid for spatially varying κ and H̄.
inline VertexMatrix bending_force(const HalfedgeMesh &mesh, const CurvatureVectors &cv,
                                  const VertexMeanCurvature &H, const ProteinModulation &mod) {
  const std::size_t nv = mesh.n_vertices();
  Eigen::VectorXd mismatch(static_cast<Eigen::Index>(nv)), area_term(static_cast<Eigen::Index>(nv));
  for (Eigen::Index v = 0; v < mismatch.size(); ++v) {
    const double dh = H.pointwise[v] - mod.curvature[v];
    mismatch[v] = mod.kappa[v] * dh;
    area_term[v] = mismatch[v] * (H.pointwise[v] + mod.curvature[v]);
  }
  VertexMatrix out = VertexMatrix::Zero(static_cast<Eigen::Index>(nv), 3);
  parallel_for(nv, [&](std::size_t v) {
    const auto i = static_cast<Eigen::Index>(v);
    Vec3 f = Vec3::Zero();
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      const auto j = static_cast<Eigen::Index>(mesh.tip(h));
      f -= (mismatch[i] + mismatch[j]) * cv.gaussian[h];
      f += (area_term[i] / 3.0 + 2.0 * area_term[j] / 3.0) * cv.mean[h];
      f -= mismatch[i] * cv.schlafli1[h] + mismatch[j] * cv.schlafli2[h];
    });
    out.row(i) = f.transpose();
  });
  return out;
}

/// −∇E_d, assembled per face from E_f = η‖w‖²/(8A) with w = Σ_k φ_k e⃗_k.
inline VertexMatrix line_tension_force(const HalfedgeMesh &mesh, const VertexPositions &r,
                                       const Geometry &g, const Eigen::VectorXd &phi, double eta) {
  const std::size_t nv = mesh.n_vertices();
  VertexMatrix out = VertexMatrix::Zero(static_cast<Eigen::Index>(nv), 3);
  if (eta == 0.0) return out;
  std::vector<Vec3> w(mesh.n_faces(), Vec3::Zero());
  parallel_for(mesh.n_faces(), [&](std::size_t f) {
    std::size_t h = mesh.face_halfedge(f);
    for (int c = 0; c < 3; ++c, h = mesh.next(h))
      w[f] += phi[static_cast<Eigen::Index>(mesh.vertex(h))] * halfedge_vector(mesh, r, mesh.next(h));
  });
  parallel_for(nv, [&](std::size_t v) {
    Vec3 grad = Vec3::Zero();
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      if (!mesh.is_interior(h)) return;
      const std::size_t f = mesh.face(h);
      const double a = g.face_area[f];
      const double pj = phi[static_cast<Eigen::Index>(mesh.tip(h))];
      const double pk = phi[static_cast<Eigen::Index>(mesh.vertex(mesh.next(mesh.next(h))))];
      grad += eta / 8.0 *
              (2.0 * (pj - pk) * w[f] / a - w[f].squaredNorm() / (a * a) * face_area_gradient(mesh, r, g, h));
    });
    out.row(static_cast<Eigen::Index>(v)) = -grad.transpose();
  });
  return out;
}

/// −∇E_a: −ε Σ_{i→j} (φ_i/3 + 2φ_j/3) ∫2H⃗_ij, which reduces to −2εφ_i∫H⃗_i
/// for uniform φ.
inline VertexMatrix adsorption_force(const HalfedgeMesh &mesh, const CurvatureVectors &cv,
                                     const Eigen::VectorXd &phi, double epsilon) {
  const std::size_t nv = mesh.n_vertices();
  VertexMatrix out = VertexMatrix::Zero(static_cast<Eigen::Index>(nv), 3);
  if (epsilon == 0.0) return out;
  parallel_for(nv, [&](std::size_t v) {
    const auto i = static_cast<Eigen::Index>(v);
    Vec3 f = Vec3::Zero();
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      const auto j = static_cast<Eigen::Index>(mesh.tip(h));
      f += (phi[i] / 3.0 + 2.0 * phi[j] / 3.0) * cv.mean[h];
    });
    out.row(i) = -epsilon * f.transpose();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Chemical potentials.

/// μ_b,i = A_i [2κ_i(H_i − H̄_i) H̄_c − (H_i − H̄_i)² κ_c].
inline Eigen::VectorXd bending_potential(const Geometry &g, const VertexMeanCurvature &H,
                                         const ProteinModulation &mod, const MembraneParameters &p) {
  Eigen::VectorXd out(H.pointwise.size());
  for (Eigen::Index v = 0; v < out.size(); ++v) {
    const double dh = H.pointwise[v] - mod.curvature[v];
    out[v] = g.vertex_dual_area[static_cast<std::size_t>(v)] *
             (2.0 * mod.kappa[v] * dh * p.curvature_c - dh * dh * p.kappa_c);
  }
  return out;
}

/// μ_a,i = −ε A_i.
inline Eigen::VectorXd adsorption_potential(const Geometry &g, double epsilon) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(g.vertex_dual_area.size()));
  for (Eigen::Index v = 0; v < out.size(); ++v)
    out[v] = -epsilon * g.vertex_dual_area[static_cast<std::size_t>(v)];
  return out;
}

/// μ_d = −η L φ.
inline Eigen::VectorXd dirichlet_potential(const SparseMatrix &L, const Eigen::VectorXd &phi, double eta) {
  if (eta == 0.0) return Eigen::VectorXd::Zero(phi.size());
  return -eta * (L * phi);
}

/// Interior-point term s(1/φ − 1/(1−φ)) of the barrier −s Σ[ln φ + ln(1−φ)].
inline Eigen::VectorXd barrier_potential(const Eigen::VectorXd &phi, double strength) {
  if (strength == 0.0) return Eigen::VectorXd::Zero(phi.size());
  return (strength * (phi.array().inverse() - (1.0 - phi.array()).inverse())).matrix();
}

inline double barrier_energy(const Eigen::VectorXd &phi, double strength) {
  if (strength == 0.0) return 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i)
    if (!(phi[i] > 0.0 && phi[i] < 1.0)) return std::numeric_limits<double>::infinity();
  return -strength * (phi.array().log() + (1.0 - phi.array()).log()).sum();
}

// ---------------------------------------------------------------------------
// Regularization.

/// Weak constraints toward a reference mesh with the same connectivity:
/// K_e/2 Σ (l − l̄)²/l̄, K_f/2 Σ (A − Ā)²/Ā and K_c/2 Σ (λ − λ̄)²/λ̄ with the
/// length cross ratio λ_ij = l_il l_jk / (l_ki l_jl).
struct Regularization {
  double K_e = 0.0, K_f = 0.0, K_c = 0.0;
  std::vector<double> ref_length, ref_face_area, ref_cross_ratio;

  bool active() const { return K_e != 0.0 || K_f != 0.0 || K_c != 0.0; }
  bool has_reference(const HalfedgeMesh &mesh) const {
    return ref_length.size() == mesh.n_edges() && ref_face_area.size() == mesh.n_faces() &&
           ref_cross_ratio.size() == mesh.n_edges();
  }
  void capture(const HalfedgeMesh &mesh, const Geometry &g);
};

/// Cross ratio per interior edge (1 on boundary edges).
inline std::vector<double> length_cross_ratio(const HalfedgeMesh &mesh, const Geometry &g) {
  std::vector<double> out(mesh.n_edges(), 1.0);
  for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
    if (mesh.is_boundary_edge(e)) continue;
    const std::size_t h = mesh.edge_halfedge(e), t = mesh.twin(h);
    // h = i→j; face (i,j,k), twin face (j,i,l).
    const double l_jk = g.edge_length[mesh.edge(mesh.next(h))];
    const double l_ki = g.edge_length[mesh.edge(mesh.next(mesh.next(h)))];
    const double l_il = g.edge_length[mesh.edge(mesh.next(t))];
    const double l_jl = g.edge_length[mesh.edge(mesh.next(mesh.next(t)))];
    out[e] = l_il * l_jk / (l_ki * l_jl);
  }
  return out;
}

inline void Regularization::capture(const HalfedgeMesh &mesh, const Geometry &g) {
  ref_length = g.edge_length;
  ref_face_area = g.face_area;
  ref_cross_ratio = length_cross_ratio(mesh, g);
}

struct RegularizationResult {
  double energy = 0.0;
  VertexMatrix force;
};

inline RegularizationResult regularization_forces(const HalfedgeMesh &mesh, const VertexPositions &r,
                                                  const Geometry &g, const Regularization &reg) {
  RegularizationResult out;
  out.force = VertexMatrix::Zero(static_cast<Eigen::Index>(mesh.n_vertices()), 3);
  if (!reg.active()) return out;
  if (!reg.has_reference(mesh))
    throw Error(ErrorCode::MissingReference, "regularization reference does not match the mesh");
  auto add = [&](std::size_t v, const Vec3 &f) { out.force.row(static_cast<Eigen::Index>(v)) += f.transpose(); };
  // d l_ab / d r_a for halfedge a→b.
  auto unit = [&](std::size_t h) { return Vec3(-halfedge_vector(mesh, r, h) / g.edge_length[mesh.edge(h)]); };
  std::vector<double> parts;

  if (reg.K_e != 0.0) {
    for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
      const double l0 = reg.ref_length[e], dl = g.edge_length[e] - l0;
      parts.push_back(0.5 * reg.K_e * dl * dl / l0);
      const std::size_t h = mesh.edge_halfedge(e);
      const Vec3 gi = unit(h);
      add(mesh.vertex(h), -reg.K_e * dl / l0 * gi);
      add(mesh.tip(h), reg.K_e * dl / l0 * gi);
    }
  }
  if (reg.K_f != 0.0) {
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
      const double a0 = reg.ref_face_area[f], da = g.face_area[f] - a0;
      parts.push_back(0.5 * reg.K_f * da * da / a0);
      std::size_t h = mesh.face_halfedge(f);
      for (int c = 0; c < 3; ++c, h = mesh.next(h))
        add(mesh.vertex(h), -reg.K_f * da / a0 * face_area_gradient(mesh, r, g, h));
    }
  }
  if (reg.K_c != 0.0) {
    const auto cross = length_cross_ratio(mesh, g);
    for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
      if (mesh.is_boundary_edge(e)) continue;
      const double c0 = reg.ref_cross_ratio[e], dc = cross[e] - c0;
      parts.push_back(0.5 * reg.K_c * dc * dc / c0);
      const double coeff = -reg.K_c * dc / c0 * cross[e];
      const std::size_t h = mesh.edge_halfedge(e), t = mesh.twin(h);
      // log λ = log l_il + log l_jk − log l_ki − log l_jl.
      const std::array<std::pair<std::size_t, double>, 4> terms{
          {{mesh.next(t), 1.0}, {mesh.next(h), 1.0}, {mesh.next(mesh.next(h)), -1.0},
           {mesh.next(mesh.next(t)), -1.0}}};
      for (const auto &[he, sign] : terms) {
        const Vec3 gu = unit(he) / g.edge_length[mesh.edge(he)];
        add(mesh.vertex(he), coeff * sign * gu);
        add(mesh.tip(he), -coeff * sign * gu);
      }
    }
  }
  out.energy = pairwise_sum(parts);
  return out;
}

} // namespace memddg

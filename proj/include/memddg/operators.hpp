#pragma once

#include "memddg/geometry.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <queue>

namespace memddg {

// ---------------------------------------------------------------------------
// Shape derivatives of mesh primitives.

/// ∇_{r_i} A_f for the corner of face(h) at the tail of h: ½ n × (opposite edge).
inline Vec3 face_area_gradient(const HalfedgeMesh &mesh, const VertexPositions &r,
                               const Geometry &g, std::size_t h) {
  const std::size_t opposite = mesh.next(h);
  return 0.5 * g.face_normal[mesh.face(h)].cross(halfedge_vector(mesh, r, opposite));
}

/// ∇_{r_i} l_ij for h = i→j: the unit vector from j to i.
inline Vec3 edge_length_gradient(const HalfedgeMesh &mesh, const VertexPositions &r,
                                 const Geometry &g, std::size_t h) {
  return -halfedge_vector(mesh, r, h) / g.edge_length[mesh.edge(h)];
}

/// ∇_{r_i} φ_ij for h = i→j on an interior edge; zero on boundary edges.
inline Vec3 dihedral_gradient_endpoint(const HalfedgeMesh &mesh, const Geometry &g,
                                       std::size_t h) {
  const std::size_t e = mesh.edge(h);
  if (mesh.is_boundary_edge(e)) return Vec3::Zero();
  const std::size_t t = mesh.twin(h);
  const double cot_a = 1.0 / std::tan(g.tip_angle(mesh, h));
  const double cot_b = 1.0 / std::tan(g.corner_angle[t]);
  return (cot_a * g.face_normal[mesh.face(h)] + cot_b * g.face_normal[mesh.face(t)]) /
         g.edge_length[e];
}

/// ∇_{r_i} φ_jk where i is the vertex of face(h) opposite to interior
/// halfedge h = j→k; zero when jk is a boundary edge.
inline Vec3 dihedral_gradient_opposite(const HalfedgeMesh &mesh, const Geometry &g,
                                       std::size_t h) {
  const std::size_t e = mesh.edge(h);
  if (mesh.is_boundary_edge(e)) return Vec3::Zero();
  const std::size_t f = mesh.face(h);
  return -g.edge_length[e] / (2.0 * g.face_area[f]) * g.face_normal[f];
}

/// ∇_{r_i} A_i of the dual area of v = i: (1/3) Σ_fan ∇_{r_i} A_f.
inline Vec3 dual_area_gradient_self(const HalfedgeMesh &mesh, const VertexPositions &r,
                                    const Geometry &g, std::size_t v) {
  Vec3 sum = Vec3::Zero();
  mesh.for_each_outgoing(v, [&](std::size_t h) {
    if (mesh.is_interior(h)) sum += face_area_gradient(mesh, r, g, h);
  });
  return sum / 3.0;
}

/// ∇_{r_i} A_j for h = i→j: (1/3) of the gradients of the faces on both sides of ij.
inline Vec3 dual_area_gradient_neighbor(const HalfedgeMesh &mesh, const VertexPositions &r,
                                        const Geometry &g, std::size_t h) {
  Vec3 sum = Vec3::Zero();
  if (mesh.is_interior(h)) sum += face_area_gradient(mesh, r, g, h);
  const std::size_t t = mesh.twin(h);
  if (mesh.is_interior(t)) sum += face_area_gradient(mesh, r, g, mesh.next(t));
  return sum / 3.0;
}

// ---------------------------------------------------------------------------
// Scalar curvature measures.

/// ∫H_ij = l_ij φ_ij / 2 per edge.
inline std::vector<double> edge_mean_curvature(const HalfedgeMesh &mesh, const Geometry &g) {
  std::vector<double> out(mesh.n_edges());
  for (std::size_t e = 0; e < mesh.n_edges(); ++e)
    out[e] = 0.5 * g.edge_length[e] * g.dihedral[e];
  return out;
}

struct VertexMeanCurvature {
  Eigen::VectorXd integrated; // ∫H_i
  Eigen::VectorXd pointwise;  // H_i = ∫H_i / A_i
};

inline VertexMeanCurvature vertex_mean_curvature(const HalfedgeMesh &mesh,
                                                 const Geometry &g) {
  const std::size_t nv = mesh.n_vertices();
  VertexMeanCurvature out{Eigen::VectorXd::Zero(nv), Eigen::VectorXd::Zero(nv)};
  parallel_for(nv, [&](std::size_t v) {
    double sum = 0.0;
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      const std::size_t e = mesh.edge(h);
      sum += 0.5 * g.edge_length[e] * g.dihedral[e];
    });
    out.integrated[v] = 0.5 * sum;
    out.pointwise[v] = g.vertex_dual_area[v] > 0.0 ? out.integrated[v] / g.vertex_dual_area[v] : 0.0;
  });
  return out;
}

/// Angle defect ∫K_i = 2π − Σ∠ (interior) or π − Σ∠ (boundary vertices).
inline Eigen::VectorXd vertex_gaussian_curvature(const HalfedgeMesh &mesh, const Geometry &g) {
  Eigen::VectorXd out(mesh.n_vertices());
  parallel_for(mesh.n_vertices(), [&](std::size_t v) {
    double sum = 0.0;
    bool boundary = false;
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      if (mesh.is_interior(h)) sum += g.corner_angle[h];
      else boundary = true;
    });
    out[v] = (boundary ? std::numbers::pi : 2.0 * std::numbers::pi) - sum;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Halfedge curvature vectors.

/// Fundamental curvature vectors, one entry per halfedge i→j (exterior
/// halfedges included, so that every neighbor j of i is represented).
struct CurvatureVectors {
  std::vector<Vec3> mean;      // ∫2H⃗_ij = ½(∇_i A_ijk + ∇_i A_ijl)
  std::vector<Vec3> gaussian;  // ∫K⃗_ij = ½ φ_ij ∇_i l_ij
  std::vector<Vec3> schlafli1; // ∫S⃗_ij,1 = ½ l_ij ∇_i φ_ij
  std::vector<Vec3> schlafli2; // ∫S⃗_ij,2 = ½ Σ_{edges e at j} l_e ∇_i φ_e

  /// Σ over outgoing halfedges (no ½: halfedges belong to one vertex).
  static VertexMatrix accumulate(const HalfedgeMesh &mesh, const std::vector<Vec3> &per_halfedge) {
    VertexMatrix out = VertexMatrix::Zero(static_cast<Eigen::Index>(mesh.n_vertices()), 3);
    parallel_for(mesh.n_vertices(), [&](std::size_t v) {
      Vec3 sum = Vec3::Zero();
      mesh.for_each_outgoing(v, [&](std::size_t h) { sum += per_halfedge[h]; });
      out.row(static_cast<Eigen::Index>(v)) = sum.transpose();
    });
    return out;
  }
};

inline CurvatureVectors curvature_vectors(const HalfedgeMesh &mesh, const VertexPositions &r,
                                          const Geometry &g) {
  const std::size_t nh = mesh.n_halfedges();
  CurvatureVectors cv;
  cv.mean.assign(nh, Vec3::Zero());
  cv.gaussian.assign(nh, Vec3::Zero());
  cv.schlafli1.assign(nh, Vec3::Zero());
  cv.schlafli2.assign(nh, Vec3::Zero());

  parallel_for(nh, [&](std::size_t h) {
    const std::size_t t = mesh.twin(h), e = mesh.edge(h);
    const bool boundary_edge = mesh.is_boundary_edge(e);
    Vec3 mean = Vec3::Zero();
    Vec3 s2 = Vec3::Zero();
    // Face on the left of i→j: (i, j, k); face across: (j, i, l).
    if (mesh.is_interior(h)) {
      const std::size_t f = mesh.face(h);
      mean += face_area_gradient(mesh, r, g, h);
      const double cot_j = 1.0 / std::tan(g.tip_angle(mesh, h));
      const double cot_k = 1.0 / std::tan(g.opposite_angle(mesh, h));
      const bool jk_boundary = mesh.is_boundary_edge(mesh.edge(mesh.next(h)));
      s2 += ((boundary_edge ? 0.0 : cot_j) - (jk_boundary ? 0.0 : cot_j + cot_k)) *
            g.face_normal[f];
    }
    if (mesh.is_interior(t)) {
      const std::size_t f = mesh.face(t);
      mean += face_area_gradient(mesh, r, g, mesh.next(t));
      const double cot_j = 1.0 / std::tan(g.corner_angle[t]);
      const double cot_l = 1.0 / std::tan(g.opposite_angle(mesh, t));
      const bool lj_boundary = mesh.is_boundary_edge(mesh.edge(mesh.next(mesh.next(t))));
      s2 += ((boundary_edge ? 0.0 : cot_j) - (lj_boundary ? 0.0 : cot_j + cot_l)) *
            g.face_normal[f];
    }
    cv.mean[h] = 0.5 * mean;
    cv.schlafli2[h] = 0.5 * s2;
    if (!boundary_edge) {
      cv.gaussian[h] = 0.5 * g.dihedral[e] * edge_length_gradient(mesh, r, g, h);
      cv.schlafli1[h] = 0.5 * g.edge_length[e] * dihedral_gradient_endpoint(mesh, g, h);
    }
  });
  return cv;
}

/// Vertex integrated mean-curvature vector ∫2H⃗_i = ∇_{r_i} A.
inline VertexMatrix vertex_mean_curvature_vector(const HalfedgeMesh &mesh,
                                                 const VertexPositions &r, const Geometry &g) {
  VertexMatrix out = VertexMatrix::Zero(static_cast<Eigen::Index>(mesh.n_vertices()), 3);
  parallel_for(mesh.n_vertices(), [&](std::size_t v) {
    Vec3 sum = Vec3::Zero();
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      if (mesh.is_interior(h)) sum += face_area_gradient(mesh, r, g, h);
    });
    out.row(static_cast<Eigen::Index>(v)) = sum.transpose();
  });
  return out;
}

/// Integrated vertex normal ∫n⃗_i = (1/3) Σ_fan A_f n⃗_f.
inline VertexMatrix vertex_volume_normal(const HalfedgeMesh &mesh, const Geometry &g) {
  VertexMatrix out = VertexMatrix::Zero(static_cast<Eigen::Index>(mesh.n_vertices()), 3);
  parallel_for(mesh.n_vertices(), [&](std::size_t v) {
    Vec3 sum = Vec3::Zero();
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      if (mesh.is_interior(h)) sum += g.face_area[mesh.face(h)] * g.face_normal[mesh.face(h)];
    });
    out.row(static_cast<Eigen::Index>(v)) = (sum / 3.0).transpose();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Cotangent Laplacian.

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Positive semidefinite cotangent Laplacian: L_ij = −(cot α + cot β)/2,
/// L_ii = −Σ_j L_ij, so that φᵀLφ = Σ_f A_f‖∇φ_f‖² and L·r = ∫2H⃗ (the
/// direction of area growth). Obtuse diamonds give negative weights, kept as is.
inline SparseMatrix cotan_laplacian(const HalfedgeMesh &mesh, const Geometry &g) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * mesh.n_edges());
  for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
    const std::size_t h = mesh.edge_halfedge(e), t = mesh.twin(h);
    const double w = 0.5 * (g.cot_opposite(mesh, h) + g.cot_opposite(mesh, t));
    const auto i = static_cast<Eigen::Index>(mesh.vertex(h));
    const auto j = static_cast<Eigen::Index>(mesh.vertex(t));
    trips.emplace_back(i, j, -w);
    trips.emplace_back(j, i, -w);
    trips.emplace_back(i, i, w);
    trips.emplace_back(j, j, w);
  }
  const auto n = static_cast<Eigen::Index>(mesh.n_vertices());
  SparseMatrix L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

inline std::size_t count_negative_cotan_weights(const HalfedgeMesh &mesh, const Geometry &g) {
  std::size_t count = 0;
  for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
    const std::size_t h = mesh.edge_halfedge(e);
    count += g.cot_opposite(mesh, h) + g.cot_opposite(mesh, mesh.twin(h)) < 0.0;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Face gradient.

/// Gradient of the linear interpolant of a vertex scalar on each face:
/// (1/2A) Σ_k φ_k n × e_k with e_k the edge opposite k.
inline std::vector<Vec3> face_surface_gradient(const HalfedgeMesh &mesh, const VertexPositions &r,
                                               const Geometry &g, const Eigen::VectorXd &phi) {
  std::vector<Vec3> out(mesh.n_faces(), Vec3::Zero());
  parallel_for(mesh.n_faces(), [&](std::size_t f) {
    if (!(g.face_area[f] > 0.0)) {
      throw Error(ErrorCode::DegenerateFace, "face " + std::to_string(f) + " has zero area");
    }
    Vec3 sum = Vec3::Zero();
    std::size_t h = mesh.face_halfedge(f);
    for (int c = 0; c < 3; ++c, h = mesh.next(h)) {
      sum += phi[static_cast<Eigen::Index>(mesh.vertex(h))] *
             halfedge_vector(mesh, r, mesh.next(h));
    }
    out[f] = g.face_normal[f].cross(sum) / (2.0 * g.face_area[f]);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Geodesic distance.

inline void require_connected(const HalfedgeMesh &mesh) {
  std::vector<bool> seen(mesh.n_vertices(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      const std::size_t w = mesh.tip(h);
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    });
  }
  if (count != mesh.n_vertices()) {
    throw Error(ErrorCode::DisconnectedComponent,
                std::to_string(mesh.n_vertices() - count) + " vertices unreachable");
  }
}

/// Shortest edge-path distance from the source set (Dijkstra).
inline Eigen::VectorXd edge_path_distance(const HalfedgeMesh &mesh, const Geometry &g,
                                          std::span<const std::size_t> sources) {
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh.n_vertices()),
                                                   std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (std::size_t s : sources) {
    dist[static_cast<Eigen::Index>(s)] = 0.0;
    queue.emplace(0.0, s);
  }
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[static_cast<Eigen::Index>(v)]) continue;
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      const std::size_t w = mesh.tip(h);
      const double nd = d + g.edge_length[mesh.edge(h)];
      if (nd < dist[static_cast<Eigen::Index>(w)]) {
        dist[static_cast<Eigen::Index>(w)] = nd;
        queue.emplace(nd, w);
      }
    });
  }
  return dist;
}

/// Heat-method geodesic distance: one backward-Euler heat step with
/// t = (mean edge length)², normalized gradient, Poisson solve. Falls back to
/// edge-path distance when a factorization fails.
inline Eigen::VectorXd geodesic_distance(const HalfedgeMesh &mesh, const VertexPositions &r,
                                         const Geometry &g, std::span<const std::size_t> sources) {
  require_connected(mesh);
  const auto n = static_cast<Eigen::Index>(mesh.n_vertices());
  double mean_len = 0.0;
  for (double l : g.edge_length) mean_len += l;
  mean_len /= static_cast<double>(g.edge_length.size());
  const double t = mean_len * mean_len;

  const SparseMatrix L = cotan_laplacian(mesh, g);
  SparseMatrix M(n, n);
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index v = 0; v < n; ++v)
      trips.emplace_back(v, v, g.vertex_dual_area[static_cast<std::size_t>(v)]);
    M.setFromTriplets(trips.begin(), trips.end());
  }
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  for (std::size_t s : sources) delta[static_cast<Eigen::Index>(s)] = 1.0;

  Eigen::SimplicialLDLT<SparseMatrix> heat(SparseMatrix(M + t * L));
  if (heat.info() != Eigen::Success) return edge_path_distance(mesh, g, sources);
  const Eigen::VectorXd u = heat.solve(delta);

  // Divergence of the normalized negative gradient: div_i = ½ Σ cot·(e·X).
  const auto grad_u = face_surface_gradient(mesh, r, g, u);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(n);
  for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
    const double len = grad_u[f].norm();
    if (!(len > 0.0)) continue;
    const Vec3 X = -grad_u[f] / len;
    std::size_t h = mesh.face_halfedge(f);
    for (int c = 0; c < 3; ++c, h = mesh.next(h)) {
      // Edge h = i→j contributes to i (and its reverse to j) weighted by the
      // cotangent of the angle opposite to h.
      const Vec3 e = halfedge_vector(mesh, r, h);
      const double w = 0.5 * g.cot_opposite(mesh, h);
      div[static_cast<Eigen::Index>(mesh.vertex(h))] += w * e.dot(X);
      div[static_cast<Eigen::Index>(mesh.tip(h))] -= w * e.dot(X);
    }
  }
  // L is PSD; Δφ = div with Δ = −L. Regularize the constant null space.
  Eigen::SimplicialLDLT<SparseMatrix> poisson(SparseMatrix(L + 1e-10 * M));
  if (poisson.info() != Eigen::Success) return edge_path_distance(mesh, g, sources);
  Eigen::VectorXd phi = poisson.solve(-div);
  double shift = 0.0;
  for (std::size_t s : sources) shift += phi[static_cast<Eigen::Index>(s)];
  shift /= static_cast<double>(sources.size());
  phi.array() -= shift;
  if (!phi.allFinite()) return edge_path_distance(mesh, g, sources);
  phi = phi.cwiseMax(0.0);
  for (std::size_t s : sources) phi[static_cast<Eigen::Index>(s)] = 0.0;
  return phi;
}

} // namespace memddg

#pragma once

#include "memddg/mesh.hpp"
#include "memddg/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <vector>

namespace memddg {

/// Primitive measurements of an embedded mesh. Everything is derived from
/// positions only; rebuild whenever positions or connectivity change.
struct Geometry {
  std::vector<double> edge_length;    // l_ij, per edge
  std::vector<double> dihedral;       // φ_ij, per edge; 0 on boundary edges
  std::vector<double> face_area;      // A_ijk
  std::vector<Vec3> face_normal;      // unit, right-hand rule
  std::vector<double> corner_angle;   // angle at the tail of h inside face(h); 0 if exterior
  std::vector<double> vertex_dual_area; // A_i = (1/3) Σ fan areas
  std::vector<std::size_t> degenerate_faces;

  /// Angle in face(h) opposite to halfedge h (the corner not on h).
  double opposite_angle(const HalfedgeMesh &mesh, std::size_t h) const {
    return mesh.is_interior(h) ? corner_angle[mesh.next(mesh.next(h))] : 0.0;
  }
  double cot_opposite(const HalfedgeMesh &mesh, std::size_t h) const {
    return mesh.is_interior(h) ? 1.0 / std::tan(opposite_angle(mesh, h)) : 0.0;
  }
  /// Angle at the tip of h inside face(h).
  double tip_angle(const HalfedgeMesh &mesh, std::size_t h) const {
    return mesh.is_interior(h) ? corner_angle[mesh.next(h)] : 0.0;
  }
};

inline Vec3 halfedge_vector(const HalfedgeMesh &mesh, const VertexPositions &r,
                            std::size_t h) {
  return row(r, mesh.tip(h)) - row(r, mesh.vertex(h));
}

/// Signed dihedral angle across the edge of interior halfedge pair (h, twin h);
/// positive where the fold is convex with respect to the outward normals.
inline double signed_dihedral(const Vec3 &n_left, const Vec3 &n_right,
                              const Vec3 &edge_dir) {
  return std::atan2(edge_dir.dot(n_left.cross(n_right)), n_left.dot(n_right));
}

inline Geometry compute_geometry(const HalfedgeMesh &mesh, const VertexPositions &r) {
  Geometry g;
  const std::size_t nf = mesh.n_faces(), ne = mesh.n_edges(), nv = mesh.n_vertices();
  g.face_area.assign(nf, 0.0);
  g.face_normal.assign(nf, Vec3::Zero());
  g.corner_angle.assign(mesh.n_halfedges(), 0.0);
  g.edge_length.assign(ne, 0.0);
  g.dihedral.assign(ne, 0.0);
  g.vertex_dual_area.assign(nv, 0.0);

  parallel_for(nf, [&](std::size_t f) {
    const std::size_t h0 = mesh.face_halfedge(f);
    const std::size_t h1 = mesh.next(h0), h2 = mesh.next(h1);
    const Vec3 e0 = halfedge_vector(mesh, r, h0);
    const Vec3 e1 = halfedge_vector(mesh, r, h1);
    const Vec3 e2 = halfedge_vector(mesh, r, h2);
    const Vec3 cr = e0.cross(e1);
    const double norm = cr.norm();
    g.face_area[f] = 0.5 * norm;
    g.face_normal[f] = norm > 0.0 ? Vec3(cr / norm) : Vec3::Zero();
    auto angle = [](const Vec3 &u, const Vec3 &v) {
      return std::atan2(u.cross(v).norm(), u.dot(v));
    };
    g.corner_angle[h0] = angle(e0, -e2);
    g.corner_angle[h1] = angle(e1, -e0);
    g.corner_angle[h2] = angle(e2, -e1);
  });
  for (std::size_t f = 0; f < nf; ++f)
    if (g.face_area[f] <= 0.0) g.degenerate_faces.push_back(f);

  parallel_for(ne, [&](std::size_t e) {
    const std::size_t h = mesh.edge_halfedge(e);
    const Vec3 ev = halfedge_vector(mesh, r, h);
    g.edge_length[e] = ev.norm();
    if (!mesh.is_boundary_edge(e)) {
      const Vec3 &nl = g.face_normal[mesh.face(h)];
      const Vec3 &nr = g.face_normal[mesh.face(mesh.twin(h))];
      g.dihedral[e] = signed_dihedral(nl, nr, ev / g.edge_length[e]);
    }
  });

  parallel_for(nv, [&](std::size_t v) {
    double area = 0.0;
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      if (mesh.is_interior(h)) area += g.face_area[mesh.face(h)];
    });
    g.vertex_dual_area[v] = area / 3.0;
  });
  return g;
}

inline double total_area(const Geometry &g) { return pairwise_sum(g.face_area); }

inline double total_area(const HalfedgeMesh &mesh, const VertexPositions &r) {
  return total_area(compute_geometry(mesh, r));
}

/// Signed volume Σ_f (1/6) r_i·(r_j × r_k) of the surface itself (no
/// boundary closure); positive for outward orientation of a closed mesh.
inline double signed_volume(const HalfedgeMesh &mesh, const VertexPositions &r) {
  std::vector<double> parts(mesh.n_faces());
  parallel_for(mesh.n_faces(), [&](std::size_t f) {
    const auto t = mesh.face_vertices(f);
    parts[f] = row(r, t[0]).dot(row(r, t[1]).cross(row(r, t[2]))) / 6.0;
  });
  return pairwise_sum(parts);
}

/// Enclosed volume. Open meshes are closed by a planar fan over each boundary
/// loop (centroid apex); loops must be planar within `planarity_tol`.
double enclosed_volume(const HalfedgeMesh &mesh, const VertexPositions &r,
                       double planarity_tol = 1e-8);

/// Largest distance of a loop vertex from the loop's least-squares plane.
inline double loop_planarity_error(const VertexPositions &r,
                                   const std::vector<std::size_t> &loop) {
  Vec3 c = Vec3::Zero();
  for (std::size_t v : loop) c += row(r, v);
  c /= static_cast<double>(loop.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t v : loop) {
    const Vec3 d = row(r, v) - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Vec3 n = eig.eigenvectors().col(0);
  double worst = 0.0;
  for (std::size_t v : loop) worst = std::max(worst, std::abs((row(r, v) - c).dot(n)));
  return worst;
}

inline double enclosed_volume(const HalfedgeMesh &mesh, const VertexPositions &r,
                              double planarity_tol) {
  double volume = signed_volume(mesh, r);
  for (const auto &loop : mesh.boundary_loop_vertices()) {
    const double err = loop_planarity_error(r, loop);
    if (err > planarity_tol) {
      throw Error(ErrorCode::NonPlanarBoundary,
                  "boundary loop deviates from its plane by " + std::to_string(err));
    }
    Vec3 c = Vec3::Zero();
    for (std::size_t v : loop) c += row(r, v);
    c /= static_cast<double>(loop.size());
    // The loop (exterior halfedge order) runs opposite to the interior
    // orientation, which is the outward orientation of the cap.
    for (std::size_t k = 0; k < loop.size(); ++k) {
      const Vec3 a = row(r, loop[k]), b = row(r, loop[(k + 1) % loop.size()]);
      volume += c.dot(a.cross(b)) / 6.0;
    }
  }
  return volume;
}

/// Normalized Σ_fan (corner angle)·n_face at v.
inline Vec3 vertex_normal_angle_weighted(const HalfedgeMesh &mesh, const Geometry &g,
                                         std::size_t v) {
  Vec3 n = Vec3::Zero();
  mesh.for_each_outgoing(v, [&](std::size_t h) {
    if (mesh.is_interior(h)) n += g.corner_angle[h] * g.face_normal[mesh.face(h)];
  });
  const double len = n.norm();
  if (!(len > 0.0)) {
    throw Error(ErrorCode::ZeroNormal, "vertex " + std::to_string(v) + " has a degenerate fan");
  }
  return n / len;
}

inline Vec3 vertex_normal_angle_weighted(const HalfedgeMesh &mesh,
                                         const VertexPositions &r, std::size_t v) {
  return vertex_normal_angle_weighted(mesh, compute_geometry(mesh, r), v);
}

} // namespace memddg

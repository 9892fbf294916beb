#pragma once

#include "memddg/operators.hpp"
#include "memddg/taylor.hpp"

#include <functional>
#include <map>
#include <random>
#include <string>

namespace memddg {

/// Worst observed central-difference order for one derivative formula.
struct PrimitiveCheck {
  std::string name;
  double worst_order = std::numeric_limits<double>::infinity();
  double max_error = 0.0;
  std::size_t samples = 0;
  std::size_t exact_samples = 0; // error at round-off level at every step
  bool passes(double min_order) const { return samples > 0 && worst_order >= min_order; }
};

/// Compares every primitive derivative and curvature vector with central
/// differences of the underlying measurement, moving the tail vertex of each
/// halfedge along a random direction.
inline std::vector<PrimitiveCheck> check_derivative_primitives(const HalfedgeMesh &mesh,
                                                               const VertexPositions &r,
                                                               std::mt19937_64 &rng,
                                                               std::span<const double> steps) {
  std::map<std::string, PrimitiveCheck> results;
  const Geometry g0 = compute_geometry(mesh, r);
  const CurvatureVectors cv = curvature_vectors(mesh, r, g0);
  std::normal_distribution<double> normal;

  for (std::size_t h = 0; h < mesh.n_halfedges(); ++h) {
    const std::size_t i = mesh.vertex(h), j = mesh.tip(h), e = mesh.edge(h);
    const Vec3 u = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
    auto measure = [&](const std::function<double(const Geometry &)> &q) {
      return [&, q](double eps) {
        VertexPositions moved = r;
        moved.row(static_cast<Eigen::Index>(i)) += eps * u.transpose();
        return q(compute_geometry(mesh, moved));
      };
    };
    auto record = [&](const std::string &name, const std::function<double(const Geometry &)> &q,
                      const Vec3 &predicted) {
      const auto study = central_difference_study(measure(q), predicted.dot(u), steps);
      auto &res = results[name];
      res.name = name;
      ++res.samples;
      res.max_error = std::max(res.max_error, study.max_error);
      if (study.exact) ++res.exact_samples;
      else res.worst_order = std::min(res.worst_order, study.order);
    };

    record("grad_edge_length", [e](const Geometry &g) { return g.edge_length[e]; },
           edge_length_gradient(mesh, r, g0, h));
    record("grad_area_diagonal", [i](const Geometry &g) { return g.vertex_dual_area[i]; },
           dual_area_gradient_self(mesh, r, g0, i));
    record("grad_area_offdiagonal", [j](const Geometry &g) { return g.vertex_dual_area[j]; },
           dual_area_gradient_neighbor(mesh, r, g0, h));
    if (mesh.is_interior(h)) {
      const std::size_t f = mesh.face(h);
      record("grad_face_area", [f](const Geometry &g) { return g.face_area[f]; },
             face_area_gradient(mesh, r, g0, h));
      const std::size_t jk = mesh.next(h);
      if (!mesh.is_boundary_edge(mesh.edge(jk))) {
        const std::size_t ejk = mesh.edge(jk);
        record("grad_dihedral_offdiagonal", [ejk](const Geometry &g) { return g.dihedral[ejk]; },
               dihedral_gradient_opposite(mesh, g0, jk));
      }
    }
    if (!mesh.is_boundary_edge(e)) {
      record("grad_dihedral_diagonal", [e](const Geometry &g) { return g.dihedral[e]; },
             dihedral_gradient_endpoint(mesh, g0, h));
    }

    // Curvature vectors against the measurements they differentiate.
    const std::size_t t = mesh.twin(h);
    const std::size_t fl = mesh.face(h), fr = mesh.face(t);
    record("mean_curvature_vector",
           [fl, fr](const Geometry &g) {
             return 0.5 * ((fl != kInvalid ? g.face_area[fl] : 0.0) +
                           (fr != kInvalid ? g.face_area[fr] : 0.0));
           },
           cv.mean[h]);
    const double phi0 = g0.dihedral[e], l0 = g0.edge_length[e];
    record("gaussian_curvature_vector",
           [e, phi0](const Geometry &g) { return 0.5 * phi0 * g.edge_length[e]; }, cv.gaussian[h]);
    record("schlafli_vector_1", [e, l0](const Geometry &g) { return 0.5 * l0 * g.dihedral[e]; },
           cv.schlafli1[h]);
    std::vector<std::pair<std::size_t, double>> at_j;
    mesh.for_each_outgoing(j, [&](std::size_t hj) {
      at_j.emplace_back(mesh.edge(hj), g0.edge_length[mesh.edge(hj)]);
    });
    record("schlafli_vector_2",
           [at_j](const Geometry &g) {
             double s = 0.0;
             for (const auto &[edge, len] : at_j) s += 0.5 * len * g.dihedral[edge];
             return s;
           },
           cv.schlafli2[h]);
  }
  std::vector<PrimitiveCheck> out;
  for (auto &[name, res] : results) out.push_back(res);
  return out;
}

} // namespace memddg

#pragma once

#include "memddg/solver.hpp"

#include <numbers>
#include <random>
#include <set>

namespace memddg {

struct RemeshConfig {
  bool flip = true;   // Delaunay flips
  bool collapse = true;
  bool split = true;
  bool shift = false; // tangential vertex shifting
  double collapse_aspect_ratio = 4.0; // circumradius / (2·inradius)
  double split_curvature = 0.3;       // |∫H_ij| / l_ij
  double max_edge_length = 0.0;       // split anything longer; 0 disables
  std::size_t max_flip_sweeps = 20;

  void validate() const {
    if (!(collapse_aspect_ratio > 1.0))
      throw Error(ErrorCode::InvalidParams, "collapse_aspect_ratio must exceed 1");
    if (!(split_curvature > 0.0)) throw Error(ErrorCode::InvalidParams, "split_curvature must be positive");
    if (max_edge_length < 0.0) throw Error(ErrorCode::InvalidParams, "max_edge_length must be nonnegative");
  }
};

enum class MutationKind { Flip, Split, Collapse, Move };

inline std::string to_string(MutationKind k) {
  switch (k) {
  case MutationKind::Flip: return "flip";
  case MutationKind::Split: return "split";
  case MutationKind::Collapse: return "collapse";
  case MutationKind::Move: return "move";
  }
  return "?";
}

/// One applied mutation. `element` is the edge (flip, split, collapse) or
/// vertex (move) index at the time it was applied; `position` and `phi` are
/// the values written to the new, surviving or moved vertex. A collapse is
/// always followed by compaction.
struct Mutation {
  MutationKind kind = MutationKind::Flip;
  std::size_t element = 0;
  Vec3 position = Vec3::Zero();
  double phi = 0.0;

  bool operator==(const Mutation &) const = default;
};

struct SkippedMutation {
  MutationKind kind;
  std::size_t element;
  std::string reason;
};

struct MutationLog {
  std::vector<Mutation> applied;
  std::vector<SkippedMutation> skipped;
};

struct RemeshReport {
  std::size_t flips = 0, splits = 0, collapses = 0, moves = 0, skipped = 0;
  double protein_before = 0.0, protein_after = 0.0; // Σ A_i φ_i
  bool changed() const { return flips + splits + collapses + moves > 0; }
};

// ---------------------------------------------------------------------------
// Local geometry on raw positions.

namespace remesh_detail {

inline Vec3 face_normal_raw(const VertexPositions &r, std::size_t a, std::size_t b, std::size_t c) {
  return (row(r, b) - row(r, a)).cross(row(r, c) - row(r, a));
}

/// Angle at `corner` in triangle (corner, p, q).
inline double angle_at(const VertexPositions &r, std::size_t corner, std::size_t p, std::size_t q) {
  const Vec3 u = row(r, p) - row(r, corner), v = row(r, q) - row(r, corner);
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

inline double aspect_ratio(const Vec3 &a, const Vec3 &b, const Vec3 &c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  const double area = 0.5 * (b - a).cross(c - a).norm();
  if (!(area > 0.0)) return std::numeric_limits<double>::infinity();
  const double s = 0.5 * (la + lb + lc);
  return la * lb * lc * s / (8.0 * area * area);
}

inline double edge_length(const HalfedgeMesh &mesh, const VertexPositions &r, std::size_t e) {
  const std::size_t h = mesh.edge_halfedge(e);
  return (row(r, mesh.tip(h)) - row(r, mesh.vertex(h))).norm();
}

inline void append_row(VertexMatrix &m, const Vec3 &v) {
  m.conservativeResize(m.rows() + 1, Eigen::NoChange);
  m.row(m.rows() - 1) = v.transpose();
}

inline void append(Eigen::VectorXd &x, double v) {
  x.conservativeResize(x.size() + 1);
  x[x.size() - 1] = v;
}

template <class Mat> Mat compact_rows(const Mat &m, const std::vector<std::size_t> &map, std::size_t n) {
  Mat out(static_cast<Eigen::Index>(n), m.cols());
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] != kInvalid) out.row(static_cast<Eigen::Index>(map[i])) = m.row(static_cast<Eigen::Index>(i));
  return out;
}

inline double fan_area(const HalfedgeMesh &mesh, const VertexPositions &r, std::size_t v) {
  double a = 0.0;
  mesh.for_each_outgoing(v, [&](std::size_t h) {
    if (!mesh.is_interior(h)) return;
    a += 0.5 * face_normal_raw(r, v, mesh.tip(h), mesh.tip(mesh.next(h))).norm();
  });
  return a;
}

} // namespace remesh_detail

inline double total_protein(const HalfedgeMesh &mesh, const VertexPositions &r, const Eigen::VectorXd &phi) {
  const Geometry g = compute_geometry(mesh, r);
  double s = 0.0;
  for (std::size_t v = 0; v < g.vertex_dual_area.size(); ++v) s += g.vertex_dual_area[v] * phi[Eigen::Index(v)];
  return s;
}

// ---------------------------------------------------------------------------
// Legality checks and primitive mutations on a System.

/// Sum of the two angles opposite interior edge e.
inline double opposite_angle_sum(const HalfedgeMesh &mesh, const VertexPositions &r, std::size_t e) {
  const std::size_t h = mesh.edge_halfedge(e), t = mesh.twin(h);
  const std::size_t a = mesh.vertex(h), b = mesh.tip(h);
  const std::size_t c = mesh.tip(mesh.next(h)), d = mesh.tip(mesh.next(t));
  return remesh_detail::angle_at(r, c, a, b) + remesh_detail::angle_at(r, d, a, b);
}

inline bool is_delaunay_edge(const HalfedgeMesh &mesh, const VertexPositions &r, std::size_t e) {
  if (mesh.is_boundary_edge(e)) return true;
  return opposite_angle_sum(mesh, r, e) <= std::numbers::pi + 1e-12;
}

/// Empty string when flipping e is allowed, otherwise the reason.
inline std::string flip_blocker(const HalfedgeMesh &mesh, const VertexPositions &r, std::size_t e) {
  if (mesh.is_boundary_edge(e)) return "boundary edge";
  if (!mesh.can_flip(e)) return "would break manifold";
  const std::size_t h = mesh.edge_halfedge(e), t = mesh.twin(h);
  const std::size_t a = mesh.vertex(h), b = mesh.tip(h);
  const std::size_t c = mesh.tip(mesh.next(h)), d = mesh.tip(mesh.next(t));
  using remesh_detail::face_normal_raw;
  const Vec3 n_old = face_normal_raw(r, a, b, c) + face_normal_raw(r, b, a, d);
  // New faces (c, d, b) and (d, c, a) must be nondegenerate and keep the
  // orientation of the diamond.
  const Vec3 n1 = face_normal_raw(r, c, d, b), n2 = face_normal_raw(r, d, c, a);
  const double scale = n_old.squaredNorm();
  if (!(n1.dot(n_old) > 1e-12 * scale && n2.dot(n_old) > 1e-12 * scale)) return "degenerate result";
  return {};
}

/// Applies flips, splits, collapses and moves to a System while keeping the
/// per-vertex fields aligned and recording each operation.
class Remesher {
public:
  Remesher(System &s, MutationLog *log = nullptr) : s_(s), log_(log) {}

  bool try_flip(std::size_t e) {
    if (const std::string why = flip_blocker(s_.mesh, s_.positions, e); !why.empty()) {
      skip(MutationKind::Flip, e, why);
      return false;
    }
    s_.mesh.flip(e);
    record({MutationKind::Flip, e, Vec3::Zero(), 0.0});
    return true;
  }

  /// Midpoint split with linear interpolation of position and φ.
  bool try_split(std::size_t e) {
    if (s_.mesh.is_boundary_edge(e)) {
      skip(MutationKind::Split, e, "boundary edge");
      return false;
    }
    const std::size_t h = s_.mesh.edge_halfedge(e);
    const std::size_t a = s_.mesh.vertex(h), b = s_.mesh.tip(h);
    const Vec3 p = 0.5 * (row(s_.positions, a) + row(s_.positions, b));
    const double phi = 0.5 * (s_.phi[Eigen::Index(a)] + s_.phi[Eigen::Index(b)]);
    apply_split(e, p, phi);
    return true;
  }

  /// Midpoint collapse with dual-area-weighted φ.
  bool try_collapse(std::size_t e) {
    HalfedgeMesh &mesh = s_.mesh;
    if (!mesh.can_collapse(e)) {
      skip(MutationKind::Collapse, e, "would break manifold");
      return false;
    }
    const std::size_t h = mesh.edge_halfedge(e);
    const std::size_t a = mesh.vertex(h), b = mesh.tip(h);
    const Vec3 p = 0.5 * (row(s_.positions, a) + row(s_.positions, b));
    if (!collapse_keeps_orientation(a, b, p)) {
      skip(MutationKind::Collapse, e, "would invert a face");
      return false;
    }
    const double wa = remesh_detail::fan_area(mesh, s_.positions, a);
    const double wb = remesh_detail::fan_area(mesh, s_.positions, b);
    const double pa = s_.phi[Eigen::Index(a)], pb = s_.phi[Eigen::Index(b)];
    const double phi = wa + wb > 0.0 ? (wa * pa + wb * pb) / (wa + wb) : 0.5 * (pa + pb);
    apply_collapse(e, p, phi);
    return true;
  }

  void move(std::size_t v, const Vec3 &p) {
    s_.positions.row(Eigen::Index(v)) = p.transpose();
    record({MutationKind::Move, v, p, s_.phi[Eigen::Index(v)]});
  }

  // Replay entry points: apply with the recorded values.
  void apply_split(std::size_t e, const Vec3 &p, double phi) {
    const std::size_t h = s_.mesh.edge_halfedge(e);
    const std::size_t a = s_.mesh.vertex(h), b = s_.mesh.tip(h);
    const std::size_t m = s_.mesh.split(e);
    (void)m;
    remesh_detail::append_row(s_.positions, p);
    remesh_detail::append(s_.phi, phi);
    if (s_.external_force.rows() > 0)
      remesh_detail::append_row(s_.external_force,
                                0.5 * (row(s_.external_force, a) + row(s_.external_force, b)));
    record({MutationKind::Split, e, p, phi});
  }

  void apply_collapse(std::size_t e, const Vec3 &p, double phi) {
    const std::size_t h = s_.mesh.edge_halfedge(e);
    const std::size_t b = s_.mesh.tip(h);
    const std::size_t a = s_.mesh.collapse(e);
    s_.positions.row(Eigen::Index(a)) = p.transpose();
    s_.phi[Eigen::Index(a)] = phi;
    if (s_.external_force.rows() > 0)
      s_.external_force.row(Eigen::Index(a)) =
          0.5 * (s_.external_force.row(Eigen::Index(a)) + s_.external_force.row(Eigen::Index(b)));
    const auto map = s_.mesh.compact();
    const std::size_t n = s_.mesh.n_vertices();
    s_.positions = remesh_detail::compact_rows(s_.positions, map.vertex_map, n);
    Eigen::VectorXd phi_new(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < map.vertex_map.size(); ++i)
      if (map.vertex_map[i] != kInvalid) phi_new[Eigen::Index(map.vertex_map[i])] = s_.phi[Eigen::Index(i)];
    s_.phi = std::move(phi_new);
    if (s_.external_force.rows() > 0)
      s_.external_force = remesh_detail::compact_rows(s_.external_force, map.vertex_map, n);
    record({MutationKind::Collapse, e, p, phi});
  }

  std::size_t skipped() const { return skipped_; }

private:
  bool collapse_keeps_orientation(std::size_t a, std::size_t b, const Vec3 &p) const {
    const HalfedgeMesh &mesh = s_.mesh;
    bool ok = true;
    for (std::size_t v : {a, b}) {
      mesh.for_each_outgoing(v, [&](std::size_t h) {
        if (!mesh.is_interior(h)) return;
        const std::size_t x = mesh.tip(h), y = mesh.tip(mesh.next(h));
        if (x == a || x == b || y == a || y == b) return; // removed faces
        const Vec3 before = remesh_detail::face_normal_raw(s_.positions, v, x, y);
        const Vec3 after = (row(s_.positions, x) - p).cross(row(s_.positions, y) - p);
        if (!(after.dot(before) > 1e-12 * before.squaredNorm())) ok = false;
      });
    }
    return ok;
  }

  void record(const Mutation &m) {
    if (log_) log_->applied.push_back(m);
  }
  void skip(MutationKind k, std::size_t e, const std::string &why) {
    ++skipped_;
    if (log_) log_->skipped.push_back({k, e, why});
  }

  System &s_;
  MutationLog *log_;
  std::size_t skipped_ = 0;
};

// ---------------------------------------------------------------------------
// Passes.

/// Flips non-Delaunay interior edges until none remain or the sweep limit
/// is hit. Returns the number of flips.
inline std::size_t delaunay_flips(System &s, MutationLog *log = nullptr, std::size_t max_sweeps = 20) {
  Remesher rm(s, log);
  std::size_t flips = 0;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    std::size_t this_sweep = 0;
    for (std::size_t e = 0; e < s.mesh.n_edges(); ++e) {
      if (is_delaunay_edge(s.mesh, s.positions, e)) continue;
      if (!flip_blocker(s.mesh, s.positions, e).empty()) continue;
      rm.try_flip(e);
      ++this_sweep;
    }
    flips += this_sweep;
    if (this_sweep == 0) break;
  }
  return flips;
}

/// Moves every interior vertex toward the barycenter of its one-ring; the
/// displacement is restricted to the tangent plane on curved surfaces.
/// Returns the largest displacement.
inline double vertex_shift(System &s, MutationLog *log = nullptr) {
  const HalfedgeMesh &mesh = s.mesh;
  const Geometry g = compute_geometry(mesh, s.positions);
  const std::size_t nv = mesh.n_vertices();
  std::vector<Vec3> target(nv);
  std::vector<bool> moves(nv, false);
  for (std::size_t v = 0; v < nv; ++v) {
    if (mesh.is_boundary_vertex(v)) continue;
    Vec3 c = Vec3::Zero();
    std::size_t k = 0;
    mesh.for_each_outgoing(v, [&](std::size_t h) {
      c += row(s.positions, mesh.tip(h));
      ++k;
    });
    c /= static_cast<double>(k);
    Vec3 d = c - row(s.positions, v);
    const Vec3 n = vertex_normal_angle_weighted(mesh, g, v);
    d -= d.dot(n) * n;
    target[v] = row(s.positions, v) + d;
    moves[v] = d.squaredNorm() > 0.0;
  }
  Remesher rm(s, log);
  double largest = 0.0;
  for (std::size_t v = 0; v < nv; ++v) {
    if (!moves[v]) continue;
    largest = std::max(largest, (target[v] - row(s.positions, v)).norm());
    rm.move(v, target[v]);
  }
  return largest;
}

/// One remeshing pass: collapse skinny triangles, split high-curvature long
/// edges, restore the Delaunay property, optionally shift vertices. The
/// regularization reference is recaptured when anything changed.
inline RemeshReport remesh_pass(System &s, const RemeshConfig &cfg, MutationLog *log = nullptr) {
  cfg.validate();
  RemeshReport rep;
  rep.protein_before = total_protein(s.mesh, s.positions, s.phi);
  Remesher rm(s, log);

  if (cfg.collapse) {
    // Shortest edge of each skinny face; indices shift after every collapse,
    // so the scan restarts until no candidate can be applied.
    bool again = true;
    std::set<std::pair<std::size_t, std::size_t>> refused; // vertex pairs
    while (again) {
      again = false;
      for (std::size_t f = 0; f < s.mesh.n_faces() && !again; ++f) {
        const auto t = s.mesh.face_vertices(f);
        const double ratio =
            remesh_detail::aspect_ratio(row(s.positions, t[0]), row(s.positions, t[1]), row(s.positions, t[2]));
        if (ratio <= cfg.collapse_aspect_ratio) continue;
        std::size_t best = kInvalid;
        double shortest = std::numeric_limits<double>::infinity();
        std::size_t h = s.mesh.face_halfedge(f);
        for (int k = 0; k < 3; ++k, h = s.mesh.next(h)) {
          const double l = remesh_detail::edge_length(s.mesh, s.positions, s.mesh.edge(h));
          if (l < shortest) {
            shortest = l;
            best = s.mesh.edge(h);
          }
        }
        const std::size_t hb = s.mesh.edge_halfedge(best);
        const auto key = std::minmax(s.mesh.vertex(hb), s.mesh.tip(hb));
        if (refused.contains(key)) continue;
        if (rm.try_collapse(best)) {
          ++rep.collapses;
          refused.clear();
          again = true;
        } else {
          refused.insert(key);
        }
      }
    }
  }

  if (cfg.split) {
    const Geometry g = compute_geometry(s.mesh, s.positions);
    std::vector<double> sorted = g.edge_length;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    std::vector<std::size_t> candidates;
    for (std::size_t e = 0; e < s.mesh.n_edges(); ++e) {
      if (s.mesh.is_boundary_edge(e)) continue;
      const double l = g.edge_length[e];
      const bool curved = std::abs(0.5 * g.dihedral[e]) > cfg.split_curvature && l > median;
      const bool long_edge = cfg.max_edge_length > 0.0 && l > cfg.max_edge_length;
      if (curved || long_edge) candidates.push_back(e);
    }
    // Splitting keeps existing edge indices, so the list stays valid.
    for (std::size_t e : candidates)
      if (rm.try_split(e)) ++rep.splits;
  }

  if (cfg.flip) rep.flips = delaunay_flips(s, log, cfg.max_flip_sweeps);
  if (cfg.shift) {
    const std::size_t before = log ? log->applied.size() : 0;
    vertex_shift(s, log);
    rep.moves = log ? log->applied.size() - before : 1;
  }
  rep.skipped = rm.skipped();
  s.mesh.validate();
  rep.protein_after = total_protein(s.mesh, s.positions, s.phi);
  if (rep.changed() && s.regularization.active())
    s.regularization.capture(s.mesh, compute_geometry(s.mesh, s.positions));
  return rep;
}

/// Applies one random legal flip, split or collapse; returns false when the
/// chosen operation was refused.
inline bool random_mutation(System &s, std::mt19937_64 &rng, MutationLog *log = nullptr,
                            std::array<double, 3> weights = {0.4, 0.3, 0.3}) {
  std::discrete_distribution<int> kind(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> pick(0, s.mesh.n_edges() - 1);
  const std::size_t e = pick(rng);
  Remesher rm(s, log);
  switch (kind(rng)) {
  case 0: return rm.try_flip(e);
  case 1: return rm.try_split(e);
  default: return rm.try_collapse(e);
  }
}

/// Re-applies a log to the state it was recorded on.
inline void replay(System &s, const MutationLog &log) {
  Remesher rm(s, nullptr);
  for (const Mutation &m : log.applied) {
    switch (m.kind) {
    case MutationKind::Flip: s.mesh.flip(m.element); break;
    case MutationKind::Split: rm.apply_split(m.element, m.position, m.phi); break;
    case MutationKind::Collapse: rm.apply_collapse(m.element, m.position, m.phi); break;
    case MutationKind::Move:
      s.positions.row(Eigen::Index(m.element)) = m.position.transpose();
      s.phi[Eigen::Index(m.element)] = m.phi;
      break;
    }
  }
}

/// Hook for the solvers: one pass per call, appending to `log`.
inline RemeshHook make_remesh_hook(RemeshConfig cfg, MutationLog *log = nullptr,
                                   std::vector<RemeshReport> *reports = nullptr) {
  return [cfg, log, reports](System &s) {
    const RemeshReport r = remesh_pass(s, cfg, log);
    if (reports) reports->push_back(r);
  };
}

} // namespace memddg

#pragma once

#include "memddg/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace memddg {

using Vec3 = Eigen::Vector3d;
/// One row per vertex. Positions are in µm; integrated forces in nN.
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using VertexPositions = VertexMatrix;
using Triangle = std::array<std::size_t, 3>;

inline constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();

inline Vec3 row(const VertexMatrix &m, std::size_t i) {
  return m.row(static_cast<Eigen::Index>(i)).transpose();
}

/// Index-based manifold triangle mesh.
///
/// Every edge owns two halfedges. Halfedges on the boundary of the surface
/// have no face (`face(h) == kInvalid`); they are chained by `next` into
/// boundary loops running opposite to the interior orientation. `vertex(h)`
/// is the tail of `h`.
class HalfedgeMesh {
public:
  HalfedgeMesh() = default;

  static HalfedgeMesh from_faces(std::size_t n_vertices,
                                 std::span<const Triangle> triangles);

  std::size_t n_vertices() const { return vertex_halfedge_.size(); }
  std::size_t n_edges() const { return edge_halfedge_.size(); }
  std::size_t n_faces() const { return face_halfedge_.size(); }
  std::size_t n_halfedges() const { return next_.size(); }

  std::size_t next(std::size_t h) const { return next_[h]; }
  std::size_t twin(std::size_t h) const { return twin_[h]; }
  std::size_t vertex(std::size_t h) const { return vertex_[h]; }
  std::size_t tip(std::size_t h) const { return vertex_[twin_[h]]; }
  std::size_t edge(std::size_t h) const { return edge_[h]; }
  std::size_t face(std::size_t h) const { return face_[h]; }
  bool is_interior(std::size_t h) const { return face_[h] != kInvalid; }

  std::size_t vertex_halfedge(std::size_t v) const { return vertex_halfedge_[v]; }
  std::size_t edge_halfedge(std::size_t e) const { return edge_halfedge_[e]; }
  std::size_t face_halfedge(std::size_t f) const { return face_halfedge_[f]; }

  bool is_boundary_edge(std::size_t e) const {
    const std::size_t h = edge_halfedge_[e];
    return !is_interior(h) || !is_interior(twin_[h]);
  }
  bool is_boundary_vertex(std::size_t v) const {
    bool boundary = false;
    for_each_outgoing(v, [&](std::size_t h) {
      if (!is_interior(h)) boundary = true;
    });
    return boundary;
  }

  /// Visit every outgoing halfedge of `v` exactly once, including the
  /// exterior one of a boundary vertex.
  template <class F> void for_each_outgoing(std::size_t v, F &&f) const {
    const std::size_t start = vertex_halfedge_[v];
    std::size_t h = start;
    do {
      f(h);
      h = next_[twin_[h]];
    } while (h != start);
  }

  std::size_t degree(std::size_t v) const {
    std::size_t d = 0;
    for_each_outgoing(v, [&](std::size_t) { ++d; });
    return d;
  }

  Triangle face_vertices(std::size_t f) const {
    const std::size_t h = face_halfedge_[f];
    return {vertex_[h], vertex_[next_[h]], vertex_[next_[next_[h]]]};
  }
  std::vector<Triangle> triangles() const {
    std::vector<Triangle> out(n_faces());
    for (std::size_t f = 0; f < n_faces(); ++f) out[f] = face_vertices(f);
    return out;
  }

  /// Exterior halfedges of each boundary loop, in loop order.
  const std::vector<std::vector<std::size_t>> &boundary_loops() const {
    return boundary_loops_;
  }
  /// Vertices of each boundary loop, in loop order.
  std::vector<std::vector<std::size_t>> boundary_loop_vertices() const {
    std::vector<std::vector<std::size_t>> out;
    for (const auto &loop : boundary_loops_) {
      auto &verts = out.emplace_back();
      for (std::size_t h : loop) verts.push_back(vertex_[h]);
    }
    return out;
  }
  bool is_closed() const { return boundary_loops_.empty(); }

  long euler_characteristic() const {
    return static_cast<long>(n_vertices()) - static_cast<long>(n_edges()) +
           static_cast<long>(n_faces());
  }

  /// Halfedge from a to b, or kInvalid.
  std::size_t find_halfedge(std::size_t a, std::size_t b) const {
    std::size_t found = kInvalid;
    for_each_outgoing(a, [&](std::size_t h) {
      if (tip(h) == b) found = h;
    });
    return found;
  }

  /// Check every connectivity invariant; throws Error on the first violation.
  void validate() const;

  // --- Mutation (exclusive access). Elements removed by `collapse` are only
  // marked dead until `compact` runs. ---

  /// Whether flipping interior edge `e` keeps the mesh manifold.
  bool can_flip(std::size_t e) const;
  void flip(std::size_t e);
  /// Split interior edge `e`; returns the index of the new vertex.
  std::size_t split(std::size_t e);
  /// Whether collapsing interior edge `e` satisfies the link condition and
  /// keeps every vertex degree ≥ 3.
  bool can_collapse(std::size_t e) const;
  /// Collapse `e` onto the tail of its canonical halfedge; returns the
  /// surviving vertex. The other endpoint is marked dead.
  std::size_t collapse(std::size_t e);

  struct Compaction {
    std::vector<std::size_t> vertex_map; // old -> new (kInvalid if removed)
    std::vector<std::size_t> face_map;
  };
  /// Drop dead elements, keeping survivors in their original relative order.
  Compaction compact();
  bool has_dead_elements() const {
    return std::find(dead_vertex_.begin(), dead_vertex_.end(), true) !=
           dead_vertex_.end();
  }
  bool vertex_alive(std::size_t v) const { return !dead_vertex_[v]; }
  bool edge_alive(std::size_t e) const { return !dead_edge_[e]; }

private:
  void rebuild_boundary_loops();
  std::size_t add_halfedge();

  std::vector<std::size_t> next_, twin_, vertex_, edge_, face_;
  std::vector<std::size_t> vertex_halfedge_, edge_halfedge_, face_halfedge_;
  std::vector<bool> dead_vertex_, dead_edge_, dead_face_, dead_halfedge_;
  std::vector<std::vector<std::size_t>> boundary_loops_;
};

// ---------------------------------------------------------------------------

inline HalfedgeMesh HalfedgeMesh::from_faces(std::size_t n_vertices,
                                             std::span<const Triangle> triangles) {
  HalfedgeMesh m;
  const std::size_t nf = triangles.size();
  m.next_.resize(3 * nf);
  m.twin_.assign(3 * nf, kInvalid);
  m.vertex_.resize(3 * nf);
  m.edge_.assign(3 * nf, kInvalid);
  m.face_.resize(3 * nf);
  m.face_halfedge_.resize(nf);

  auto key = [n_vertices](std::size_t a, std::size_t b) { return a * n_vertices + b; };
  std::unordered_map<std::size_t, std::size_t> directed;
  directed.reserve(3 * nf);
  std::unordered_map<std::size_t, int> undirected_count;
  undirected_count.reserve(3 * nf);

  for (std::size_t f = 0; f < nf; ++f) {
    const auto &t = triangles[f];
    for (int c = 0; c < 3; ++c) {
      if (t[c] >= n_vertices) {
        throw Error(ErrorCode::InvalidIndex, "face " + std::to_string(f) +
                                                 " references vertex " +
                                                 std::to_string(t[c]));
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[2] == t[0]) {
      throw Error(ErrorCode::DegenerateFace,
                  "face " + std::to_string(f) + " repeats a vertex");
    }
    for (int c = 0; c < 3; ++c) {
      const std::size_t a = t[c], b = t[(c + 1) % 3];
      const std::size_t h = 3 * f + c;
      m.vertex_[h] = a;
      m.face_[h] = f;
      m.next_[h] = 3 * f + (c + 1) % 3;
      ++undirected_count[key(std::min(a, b), std::max(a, b))];
    }
    m.face_halfedge_[f] = 3 * f;
  }
  for (const auto &[k, count] : undirected_count) {
    if (count > 2) {
      throw Error(ErrorCode::NonManifoldEdge,
                  "edge (" + std::to_string(k / n_vertices) + ", " +
                      std::to_string(k % n_vertices) + ") has " +
                      std::to_string(count) + " faces");
    }
  }
  for (std::size_t h = 0; h < 3 * nf; ++h) {
    const std::size_t a = m.vertex_[h], b = m.vertex_[m.next_[h]];
    auto [it, inserted] = directed.emplace(key(a, b), h);
    if (!inserted) {
      throw Error(ErrorCode::InconsistentOrientation,
                  "halfedge (" + std::to_string(a) + " -> " + std::to_string(b) +
                      ") appears in two faces");
    }
  }

  // Pair interior halfedges; unmatched ones get an exterior twin.
  std::vector<std::size_t> exterior_out(n_vertices, kInvalid);
  for (std::size_t h = 0; h < 3 * nf; ++h) {
    if (m.twin_[h] != kInvalid) continue;
    const std::size_t a = m.vertex_[h], b = m.vertex_[m.next_[h]];
    auto it = directed.find(key(b, a));
    if (it != directed.end()) {
      m.twin_[h] = it->second;
      m.twin_[it->second] = h;
    } else {
      const std::size_t g = m.add_halfedge();
      m.vertex_[g] = b;
      m.face_[g] = kInvalid;
      m.twin_[g] = h;
      m.twin_[h] = g;
      if (exterior_out[b] != kInvalid) {
        throw Error(ErrorCode::NonManifoldVertex,
                    "vertex " + std::to_string(b) + " touches two boundary gaps");
      }
      exterior_out[b] = g;
    }
  }
  for (std::size_t g = 3 * nf; g < m.next_.size(); ++g) {
    m.next_[g] = exterior_out[m.vertex_[m.twin_[g]]];
  }

  // Edges.
  for (std::size_t h = 0; h < m.next_.size(); ++h) {
    if (m.edge_[h] != kInvalid) continue;
    const std::size_t e = m.edge_halfedge_.size();
    const std::size_t canonical = m.face_[h] != kInvalid ? h : m.twin_[h];
    m.edge_halfedge_.push_back(canonical);
    m.edge_[h] = e;
    m.edge_[m.twin_[h]] = e;
  }

  // Vertex anchors: the exterior outgoing halfedge for boundary vertices.
  m.vertex_halfedge_.assign(n_vertices, kInvalid);
  for (std::size_t h = 0; h < 3 * nf; ++h) {
    if (m.vertex_halfedge_[m.vertex_[h]] == kInvalid) m.vertex_halfedge_[m.vertex_[h]] = h;
  }
  for (std::size_t v = 0; v < n_vertices; ++v) {
    if (exterior_out[v] != kInvalid) m.vertex_halfedge_[v] = exterior_out[v];
    if (m.vertex_halfedge_[v] == kInvalid) {
      throw Error(ErrorCode::IsolatedVertex,
                  "vertex " + std::to_string(v) + " belongs to no face");
    }
  }

  m.dead_vertex_.assign(n_vertices, false);
  m.dead_edge_.assign(m.n_edges(), false);
  m.dead_face_.assign(nf, false);
  m.dead_halfedge_.assign(m.next_.size(), false);

  // A vertex whose fan does not close is non-manifold (e.g. two cones
  // touching at a tip).
  std::vector<std::size_t> incident(n_vertices, 0);
  for (std::size_t h = 0; h < m.next_.size(); ++h) ++incident[m.vertex_[h]];
  for (std::size_t v = 0; v < n_vertices; ++v) {
    std::size_t count = 0;
    m.for_each_outgoing(v, [&](std::size_t) { ++count; });
    if (count != incident[v]) {
      throw Error(ErrorCode::NonManifoldVertex,
                  "fan of vertex " + std::to_string(v) + " is not a single disk");
    }
  }
  m.rebuild_boundary_loops();
  return m;
}

inline std::size_t HalfedgeMesh::add_halfedge() {
  next_.push_back(kInvalid);
  twin_.push_back(kInvalid);
  vertex_.push_back(kInvalid);
  edge_.push_back(kInvalid);
  face_.push_back(kInvalid);
  dead_halfedge_.push_back(false);
  return next_.size() - 1;
}

inline void HalfedgeMesh::rebuild_boundary_loops() {
  boundary_loops_.clear();
  std::vector<bool> seen(next_.size(), false);
  for (std::size_t h = 0; h < next_.size(); ++h) {
    if (face_[h] != kInvalid || seen[h] ||
        (h < dead_halfedge_.size() && dead_halfedge_[h]))
      continue;
    auto &loop = boundary_loops_.emplace_back();
    std::size_t g = h;
    do {
      seen[g] = true;
      loop.push_back(g);
      g = next_[g];
    } while (g != h);
  }
}

inline void HalfedgeMesh::validate() const {
  auto fail = [](ErrorCode c, const std::string &msg) { throw Error(c, msg); };
  const std::size_t nh = next_.size();
  for (std::size_t h = 0; h < nh; ++h) {
    if (!dead_halfedge_.empty() && dead_halfedge_[h]) continue;
    const std::size_t t = twin_[h];
    if (t == kInvalid || t == h || twin_[t] != h)
      fail(ErrorCode::NonManifoldEdge, "twin is not an involution at halfedge " +
                                           std::to_string(h));
    if (edge_[h] != edge_[t])
      fail(ErrorCode::NonManifoldEdge, "twins disagree on edge at " + std::to_string(h));
    if (vertex_[next_[h]] != vertex_[t])
      fail(ErrorCode::InconsistentOrientation,
           "next does not start at the tip of halfedge " + std::to_string(h));
    if (face_[h] != kInvalid) {
      if (next_[next_[next_[h]]] != h)
        fail(ErrorCode::NonManifoldEdge, "face loop is not a triangle at " +
                                             std::to_string(h));
      if (face_[next_[h]] != face_[h])
        fail(ErrorCode::InconsistentOrientation, "face loop leaves its face");
    } else if (face_[t] == kInvalid) {
      fail(ErrorCode::NonManifoldEdge, "edge without faces at " + std::to_string(h));
    }
  }
  for (std::size_t e = 0; e < n_edges(); ++e) {
    if (!dead_edge_.empty() && dead_edge_[e]) continue;
    if (edge_[edge_halfedge_[e]] != e)
      fail(ErrorCode::NonManifoldEdge, "edge anchor mismatch at " + std::to_string(e));
  }
  for (std::size_t f = 0; f < n_faces(); ++f) {
    if (!dead_face_.empty() && dead_face_[f]) continue;
    if (face_[face_halfedge_[f]] != f)
      fail(ErrorCode::NonManifoldEdge, "face anchor mismatch at " + std::to_string(f));
    const auto t = face_vertices(f);
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      fail(ErrorCode::DegenerateFace, "face " + std::to_string(f) + " repeats a vertex");
  }
  for (std::size_t v = 0; v < n_vertices(); ++v) {
    if (!dead_vertex_.empty() && dead_vertex_[v]) continue;
    if (vertex_[vertex_halfedge_[v]] != v)
      fail(ErrorCode::IsolatedVertex, "vertex anchor mismatch at " + std::to_string(v));
    std::size_t exterior = 0, count = 0;
    std::vector<std::size_t> neighbors;
    for_each_outgoing(v, [&](std::size_t h) {
      ++count;
      exterior += face_[h] == kInvalid;
      neighbors.push_back(tip(h));
      if (count > nh) fail(ErrorCode::NonManifoldVertex, "fan does not close");
    });
    if (exterior > 1)
      fail(ErrorCode::NonManifoldVertex, "vertex " + std::to_string(v) +
                                             " has several boundary gaps");
    std::sort(neighbors.begin(), neighbors.end());
    if (std::adjacent_find(neighbors.begin(), neighbors.end()) != neighbors.end())
      fail(ErrorCode::NonManifoldEdge, "duplicate edge at vertex " + std::to_string(v));
  }
}

inline bool HalfedgeMesh::can_flip(std::size_t e) const {
  const std::size_t h0 = edge_halfedge_[e], t0 = twin_[h0];
  if (!is_interior(h0) || !is_interior(t0)) return false;
  const std::size_t c = vertex_[next_[next_[h0]]];
  const std::size_t d = vertex_[next_[next_[t0]]];
  if (c == d) return false;
  if (find_halfedge(c, d) != kInvalid) return false;
  // Endpoints lose one neighbor; interior vertices must keep degree ≥ 3 and
  // boundary vertices at least one face.
  auto keeps_degree = [&](std::size_t v) { return degree(v) > (is_boundary_vertex(v) ? 2u : 3u); };
  return keeps_degree(vertex_[h0]) && keeps_degree(vertex_[t0]);
}

inline void HalfedgeMesh::flip(std::size_t e) {
  const std::size_t h0 = edge_halfedge_[e], h1 = next_[h0], h2 = next_[h1];
  const std::size_t t0 = twin_[h0], t1 = next_[t0], t2 = next_[t1];
  const std::size_t a = vertex_[h0], b = vertex_[t0];
  const std::size_t c = vertex_[h2], d = vertex_[t2];
  const std::size_t f0 = face_[h0], f1 = face_[t0];

  vertex_[h0] = c;
  vertex_[t0] = d;
  next_[h0] = t2;
  next_[t2] = h1;
  next_[h1] = h0;
  next_[t0] = h2;
  next_[h2] = t1;
  next_[t1] = t0;
  face_[t2] = f0;
  face_[h2] = f1;
  face_halfedge_[f0] = h0;
  face_halfedge_[f1] = t0;
  if (vertex_halfedge_[a] == h0) vertex_halfedge_[a] = t1;
  if (vertex_halfedge_[b] == t0) vertex_halfedge_[b] = h1;
}

inline std::size_t HalfedgeMesh::split(std::size_t e) {
  const std::size_t h0 = edge_halfedge_[e], h1 = next_[h0], h2 = next_[h1];
  const std::size_t t0 = twin_[h0], t1 = next_[t0], t2 = next_[t1];
  const std::size_t b = vertex_[t0];
  const std::size_t c = vertex_[h2], d = vertex_[t2];
  const std::size_t f0 = face_[h0], f1 = face_[t0];

  const std::size_t m = vertex_halfedge_.size();
  vertex_halfedge_.push_back(kInvalid);
  dead_vertex_.push_back(false);

  const std::size_t g0 = add_halfedge(), g1 = add_halfedge(); // m-b
  const std::size_t k0 = add_halfedge(), k1 = add_halfedge(); // c-m / m-c
  const std::size_t j0 = add_halfedge(), j1 = add_halfedge(); // m-d / d-m
  const std::size_t e1 = edge_halfedge_.size(), e2 = e1 + 1, e3 = e1 + 2;
  edge_halfedge_.insert(edge_halfedge_.end(), {g0, k1, j0});
  dead_edge_.insert(dead_edge_.end(), {false, false, false});
  const std::size_t F1 = face_halfedge_.size(), F2 = F1 + 1;
  face_halfedge_.insert(face_halfedge_.end(), {g0, g1});
  dead_face_.insert(dead_face_.end(), {false, false});

  auto set = [&](std::size_t h, std::size_t nxt, std::size_t tail, std::size_t tw,
                 std::size_t ed, std::size_t fa) {
    next_[h] = nxt;
    vertex_[h] = tail;
    twin_[h] = tw;
    edge_[h] = ed;
    face_[h] = fa;
  };
  // (a, m, c)
  set(h0, k1, vertex_[h0], t0, e, f0);
  set(k1, h2, m, k0, e2, f0);
  next_[h2] = h0;
  // (m, b, c)
  set(g0, h1, m, g1, e1, F1);
  next_[h1] = k0;
  face_[h1] = F1;
  set(k0, g0, c, k1, e2, F1);
  // (b, m, d)
  set(g1, j0, b, g0, e1, F2);
  set(j0, t2, m, j1, e3, F2);
  next_[t2] = g1;
  face_[t2] = F2;
  // (m, a, d)
  set(t0, t1, m, h0, e, f1);
  set(j1, t0, d, j0, e3, f1);
  next_[t1] = j1;

  face_halfedge_[f0] = h0;
  face_halfedge_[f1] = t0;
  edge_halfedge_[e] = h0;
  vertex_halfedge_[m] = g0;
  if (vertex_halfedge_[b] == t0) vertex_halfedge_[b] = h1;
  return m;
}

inline bool HalfedgeMesh::can_collapse(std::size_t e) const {
  const std::size_t h0 = edge_halfedge_[e], t0 = twin_[h0];
  if (!is_interior(h0) || !is_interior(t0)) return false;
  const std::size_t a = vertex_[h0], b = vertex_[t0];
  if (is_boundary_vertex(a) || is_boundary_vertex(b)) return false;
  const std::size_t c = vertex_[next_[next_[h0]]];
  const std::size_t d = vertex_[next_[next_[t0]]];
  if (degree(c) <= 3 || degree(d) <= 3) return false;
  if (degree(a) + degree(b) - 4 < 3) return false;
  // Link condition: a and b share exactly the neighbors c and d.
  std::vector<std::size_t> na, nb;
  for_each_outgoing(a, [&](std::size_t h) { na.push_back(tip(h)); });
  for_each_outgoing(b, [&](std::size_t h) { nb.push_back(tip(h)); });
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  std::vector<std::size_t> common;
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(),
                        std::back_inserter(common));
  return common.size() == 2;
}

inline std::size_t HalfedgeMesh::collapse(std::size_t e) {
  const std::size_t h0 = edge_halfedge_[e], h1 = next_[h0], h2 = next_[h1];
  const std::size_t t0 = twin_[h0], t1 = next_[t0], t2 = next_[t1];
  const std::size_t a = vertex_[h0], b = vertex_[t0];
  const std::size_t c = vertex_[h2], d = vertex_[t2];
  const std::size_t o1 = twin_[h1], o2 = twin_[h2];
  const std::size_t p1 = twin_[t1], p2 = twin_[t2];

  std::vector<std::size_t> from_b;
  for_each_outgoing(b, [&](std::size_t h) { from_b.push_back(h); });
  for (std::size_t h : from_b) vertex_[h] = a;

  const std::size_t keep_ac = edge_[h2], drop_bc = edge_[h1];
  const std::size_t keep_ad = edge_[t1], drop_bd = edge_[t2];
  twin_[o1] = o2;
  twin_[o2] = o1;
  edge_[o1] = keep_ac;
  edge_halfedge_[keep_ac] = is_interior(o2) ? o2 : o1;
  twin_[p1] = p2;
  twin_[p2] = p1;
  edge_[p2] = keep_ad;
  edge_halfedge_[keep_ad] = is_interior(p1) ? p1 : p2;

  vertex_halfedge_[a] = o2;
  if (vertex_halfedge_[c] == h2) vertex_halfedge_[c] = o1;
  if (vertex_halfedge_[d] == t2) vertex_halfedge_[d] = p1;

  dead_vertex_[b] = true;
  dead_face_[face_[h0]] = true;
  dead_face_[face_[t0]] = true;
  dead_edge_[e] = true;
  dead_edge_[drop_bc] = true;
  dead_edge_[drop_bd] = true;
  for (std::size_t h : {h0, h1, h2, t0, t1, t2}) dead_halfedge_[h] = true;
  return a;
}

inline HalfedgeMesh::Compaction HalfedgeMesh::compact() {
  auto make_map = [](const std::vector<bool> &dead) {
    std::vector<std::size_t> map(dead.size(), kInvalid);
    std::size_t next_id = 0;
    for (std::size_t i = 0; i < dead.size(); ++i)
      if (!dead[i]) map[i] = next_id++;
    return map;
  };
  const auto vmap = make_map(dead_vertex_);
  const auto emap = make_map(dead_edge_);
  const auto fmap = make_map(dead_face_);
  const auto hmap = make_map(dead_halfedge_);

  auto remap = [](std::size_t x, const std::vector<std::size_t> &map) {
    return x == kInvalid ? kInvalid : map[x];
  };
  auto shrink = [](std::vector<std::size_t> &values, const std::vector<bool> &dead) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!dead[i]) values[w++] = values[i];
    values.resize(w);
  };
  for (std::size_t h = 0; h < next_.size(); ++h) {
    next_[h] = remap(next_[h], hmap);
    twin_[h] = remap(twin_[h], hmap);
    vertex_[h] = remap(vertex_[h], vmap);
    edge_[h] = remap(edge_[h], emap);
    face_[h] = remap(face_[h], fmap);
  }
  for (auto &h : vertex_halfedge_) h = remap(h, hmap);
  for (auto &h : edge_halfedge_) h = remap(h, hmap);
  for (auto &h : face_halfedge_) h = remap(h, hmap);

  shrink(next_, dead_halfedge_);
  shrink(twin_, dead_halfedge_);
  shrink(vertex_, dead_halfedge_);
  shrink(edge_, dead_halfedge_);
  shrink(face_, dead_halfedge_);
  shrink(vertex_halfedge_, dead_vertex_);
  shrink(edge_halfedge_, dead_edge_);
  shrink(face_halfedge_, dead_face_);

  dead_vertex_.assign(vertex_halfedge_.size(), false);
  dead_edge_.assign(edge_halfedge_.size(), false);
  dead_face_.assign(face_halfedge_.size(), false);
  dead_halfedge_.assign(next_.size(), false);

  // Re-anchor boundary vertices on their exterior halfedge.
  for (std::size_t h = 0; h < next_.size(); ++h)
    if (face_[h] == kInvalid) vertex_halfedge_[vertex_[h]] = h;
  rebuild_boundary_loops();
  return {vmap, fmap};
}

} // namespace memddg

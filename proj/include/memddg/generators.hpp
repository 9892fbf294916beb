#pragma once

#include "memddg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

namespace memddg {

/// A mesh together with its embedding.
struct MeshData {
  HalfedgeMesh mesh;
  VertexPositions positions;
};

inline MeshData make_mesh(const std::vector<Vec3> &points, const std::vector<Triangle> &tris) {
  MeshData out;
  out.positions.resize(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    out.positions.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  out.mesh = HalfedgeMesh::from_faces(points.size(), tris);
  return out;
}

/// Regular tetrahedron with unit edges, centered at the origin.
inline MeshData tetrahedron(double edge = 1.0) {
  const double s = edge / (2.0 * std::sqrt(2.0));
  std::vector<Vec3> p{{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  return make_mesh(p, {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}});
}

/// Axis-aligned unit cube [0,1]³, two triangles per side.
inline MeshData cube(double side = 1.0) {
  std::vector<Vec3> p;
  for (int i = 0; i < 8; ++i)
    p.emplace_back(side * (i & 1), side * ((i >> 1) & 1), side * ((i >> 2) & 1));
  std::vector<Triangle> t{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                          {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return make_mesh(p, t);
}

/// Icosahedron refined `subdivisions` times by 1-to-4 splits, projected on
/// the sphere of the given radius.
inline MeshData icosphere(int subdivisions, double radius = 1.0) {
  if (subdivisions < 0 || !(radius > 0.0))
    throw Error(ErrorCode::InvalidParams, "icosphere needs subdivisions >= 0 and radius > 0");
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> p{{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0},
                      {0, -1, g}, {0, 1, g}, {0, -1, -g}, {0, 1, -g},
                      {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  for (auto &v : p) v.normalize();
  std::vector<Triangle> t{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                          {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                          {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                          {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> mid;
    auto midpoint = [&](std::size_t a, std::size_t b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      p.push_back((p[a] + p[b]).normalized());
      return mid[key] = p.size() - 1;
    };
    std::vector<Triangle> refined;
    refined.reserve(4 * t.size());
    for (const auto &f : t) {
      const std::size_t ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]),
                        ca = midpoint(f[2], f[0]);
      refined.push_back({f[0], ab, ca});
      refined.push_back({f[1], bc, ab});
      refined.push_back({f[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    t = std::move(refined);
  }
  for (auto &v : p) v *= radius;
  return make_mesh(p, t);
}

/// Icosphere vertices moved radially onto the spheroid
/// x²/a² + y²/a² + z²/c² = 1.
inline MeshData spheroid(int subdivisions, double a = 1.0, double c = 0.5) {
  if (!(a > 0.0) || !(c > 0.0)) throw Error(ErrorCode::InvalidParams, "spheroid axes must be positive");
  MeshData m = icosphere(subdivisions, 1.0);
  for (Eigen::Index i = 0; i < m.positions.rows(); ++i) {
    const Vec3 u = m.positions.row(i).transpose();
    const double s = std::sqrt((u.x() * u.x() + u.y() * u.y()) / (a * a) + u.z() * u.z() / (c * c));
    m.positions.row(i) = (u / s).transpose();
  }
  return m;
}

/// Open cylinder along z from 0 to `length`. Each ring is rotated by half an
/// angular step relative to the previous one.
inline MeshData tube(double radius, double length, std::size_t n_around, std::size_t n_rings) {
  if (!(radius > 0.0) || !(length > 0.0) || n_around < 3 || n_rings < 2)
    throw Error(ErrorCode::InvalidParams, "tube needs radius, length > 0, n_around >= 3, n_rings >= 2");
  std::vector<Vec3> p;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n_around);
  for (std::size_t k = 0; k < n_rings; ++k) {
    const double z = length * static_cast<double>(k) / static_cast<double>(n_rings - 1);
    for (std::size_t i = 0; i < n_around; ++i) {
      const double th = step * (static_cast<double>(i) + 0.5 * static_cast<double>(k));
      p.emplace_back(radius * std::cos(th), radius * std::sin(th), z);
    }
  }
  std::vector<Triangle> t;
  auto id = [&](std::size_t k, std::size_t i) { return k * n_around + i % n_around; };
  for (std::size_t k = 0; k + 1 < n_rings; ++k) {
    for (std::size_t i = 0; i < n_around; ++i) {
      t.push_back({id(k, i), id(k, i + 1), id(k + 1, i)});
      t.push_back({id(k, i + 1), id(k + 1, i + 1), id(k + 1, i)});
    }
  }
  return make_mesh(p, t);
}

/// Flat disk in the xy-plane built from a hexagonal lattice with `rings`
/// rings; lattice ring k is mapped onto the circle of radius R·k/rings.
inline MeshData hex_patch(double radius, std::size_t rings) {
  if (!(radius > 0.0) || rings < 1)
    throw Error(ErrorCode::InvalidParams, "hex patch needs radius > 0 and rings >= 1");
  const long n = static_cast<long>(rings);
  std::map<std::pair<long, long>, std::size_t> index;
  std::vector<Vec3> p;
  auto hex_distance = [](long q, long r) { return std::max({std::abs(q), std::abs(r), std::abs(q + r)}); };
  // Vertices ordered by ring, so the center is vertex 0.
  std::vector<std::pair<long, long>> lattice;
  for (long q = -n; q <= n; ++q)
    for (long r = -n; r <= n; ++r)
      if (hex_distance(q, r) <= n) lattice.emplace_back(q, r);
  std::stable_sort(lattice.begin(), lattice.end(), [&](const auto &a, const auto &b) {
    return hex_distance(a.first, a.second) < hex_distance(b.first, b.second);
  });
  for (const auto &[q, r] : lattice) {
    const long k = hex_distance(q, r);
    Vec3 pos = Vec3::Zero();
    if (k > 0) {
      // Lattice position, then perimeter fraction on hexagon ring k.
      const double x = static_cast<double>(q) + 0.5 * static_cast<double>(r);
      const double y = std::sqrt(3.0) / 2.0 * static_cast<double>(r);
      double th = std::atan2(y, x);
      if (th < 0.0) th += 2.0 * std::numbers::pi;
      const double sector_angle = std::numbers::pi / 3.0;
      const int m = std::min(5, static_cast<int>(std::floor(th / sector_angle + 1e-12)));
      const double kk = static_cast<double>(k);
      const Vec3 c0(kk * std::cos(m * sector_angle), kk * std::sin(m * sector_angle), 0.0);
      const Vec3 c1(kk * std::cos((m + 1) * sector_angle), kk * std::sin((m + 1) * sector_angle), 0.0);
      const double frac = (Vec3(x, y, 0.0) - c0).norm() / (c1 - c0).norm();
      const double ang = (m + frac) * sector_angle;
      const double rad = radius * kk / static_cast<double>(n);
      pos = Vec3(rad * std::cos(ang), rad * std::sin(ang), 0.0);
    }
    index[{q, r}] = p.size();
    p.push_back(pos);
  }
  std::vector<Triangle> t;
  auto has = [&](long q, long r) { return index.count({q, r}) > 0; };
  for (const auto &[key, v] : index) {
    const auto [q, r] = key;
    if (has(q + 1, r) && has(q, r + 1)) t.push_back({v, index[{q + 1, r}], index[{q, r + 1}]});
    if (has(q + 1, r) && has(q + 1, r - 1)) t.push_back({v, index[{q + 1, r - 1}], index[{q + 1, r}]});
  }
  return make_mesh(p, t);
}

} // namespace memddg

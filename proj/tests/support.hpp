#pragma once

// Shared fixtures for the test binaries.

#include "memddg/generators.hpp"
#include "memddg/taylor.hpp"

#include <random>

namespace memddg::testing {

/// Icosphere with every vertex displaced by up to `noise` (relative to radius).
inline MeshData noisy_icosphere(int subdivisions, double noise, std::uint64_t seed) {
  MeshData m = icosphere(subdivisions);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-noise, noise);
  for (Eigen::Index i = 0; i < m.positions.rows(); ++i)
    for (int c = 0; c < 3; ++c) m.positions(i, c) += u(rng);
  return m;
}

/// Two-ring hexagonal patch with random in-plane jitter and height noise;
/// the center vertex has a complete two-ring neighborhood.
inline MeshData random_fan(std::mt19937_64 &rng) {
  MeshData m = hex_patch(1.0, 2);
  std::uniform_real_distribution<double> jitter(-0.08, 0.08), height(-0.25, 0.25);
  for (Eigen::Index i = 0; i < m.positions.rows(); ++i) {
    m.positions(i, 0) += jitter(rng);
    m.positions(i, 1) += jitter(rng);
    m.positions(i, 2) += height(rng);
  }
  return m;
}

/// Single diamond (two faces sharing edge 0–1) with random vertex positions.
inline MeshData random_diamond(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0}, {0.5, 0.8, 0}, {0.5, -0.8, 0}};
  for (auto &x : p) x += Vec3(u(rng), u(rng), u(rng));
  return make_mesh(p, {{0, 1, 2}, {1, 0, 3}});
}

inline VertexMatrix random_direction(std::size_t n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  VertexMatrix d(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (int c = 0; c < 3; ++c) d(i, c) = g(rng);
  return d / d.norm();
}

inline Eigen::VectorXd random_field(std::size_t n, double lo, double hi, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

inline Vec3 random_unit(std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  return Vec3(g(rng), g(rng), g(rng)).normalized();
}

/// Steps for central-difference convergence studies.
inline std::vector<double> difference_steps() { return log_sweep(1e-4, 1e-2, 4); }

} // namespace memddg::testing

#pragma once

#include "memddg/system.hpp"

#include <chrono>
#include <functional>

namespace memddg {

// ---------------------------------------------------------------------------
// Norms.

/// Frobenius norm of a per-vertex force matrix.
inline double l2_residual(const VertexMatrix &f) { return f.size() == 0 ? 0.0 : f.norm(); }
inline double l2_residual(const Eigen::VectorXd &mu) { return mu.size() == 0 ? 0.0 : mu.norm(); }

/// Σ|a_i − ā_i| / A over integrated scalar values.
inline double l1_field_error(const Eigen::VectorXd &a, const Eigen::VectorXd &ref, double total_area) {
  if (a.size() != ref.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(ref.size()));
  return (a - ref).cwiseAbs().sum() / total_area;
}

/// Vector variant: Σ‖a_i − ā_i‖ / A.
inline double l1_field_error(const VertexMatrix &a, const VertexMatrix &ref, double total_area) {
  if (a.rows() != ref.rows() || a.cols() != ref.cols())
    throw Error(ErrorCode::LengthMismatch, std::to_string(a.rows()) + " vs " + std::to_string(ref.rows()));
  return (a - ref).rowwise().norm().sum() / total_area;
}

// ---------------------------------------------------------------------------
// Configuration and bookkeeping.

struct SolverConfig {
  double dt_init = 1e-5;      // s
  double dt_max = 0.0;        // cap on step growth; 0 means dt_init
  double tolerance = 1e-6;    // on ‖∫f⃗‖ (nN)
  std::size_t max_steps = 1000;
  double sufficient_decrease = 1e-4;
  double shrink = 0.5;
  std::size_t max_backtracks = 64;
  double growth = 1.2;
  std::size_t cg_restart_period = 30;
  double barrier_strength = 1e-7; // µm·nN
  std::size_t remesh_period = 0;  // 0 disables
  std::size_t output_period = 1;
  bool freeze_shape = false;

  void validate() const {
    auto bad = [](const std::string &what) { throw Error(ErrorCode::InvalidParams, what); };
    if (!(dt_init > 0.0)) bad("dt_init must be positive");
    if (dt_max < 0.0) bad("dt_max must be nonnegative");
    if (!(tolerance > 0.0)) bad("tolerance must be positive");
    if (!(shrink > 0.0 && shrink < 1.0)) bad("shrink must lie in (0,1)");
    if (!(sufficient_decrease > 0.0 && sufficient_decrease < 0.5)) bad("sufficient_decrease must lie in (0,0.5)");
    if (growth < 1.0) bad("growth must be at least 1");
    if (barrier_strength < 0.0) bad("barrier_strength must be nonnegative");
  }
  double step_cap() const { return dt_max > 0.0 ? dt_max : dt_init; }
};

/// Mutable solver state carried between steps.
struct SolverState {
  double dt = 0.0;
  double barrier_strength = 0.0;
  std::size_t step = 0;
  VertexMatrix cg_direction;
  VertexMatrix cg_previous_force;
  std::size_t cg_since_restart = 0;

  static SolverState from(const SolverConfig &c) {
    SolverState s;
    s.dt = c.dt_init;
    s.barrier_strength = c.barrier_strength;
    return s;
  }
};

/// Outcome of one line search.
struct LineSearchResult {
  double step = 0.0; // accepted dt (Euler) or α (CG)
  double energy_before = 0.0;
  double energy_after = 0.0;
  std::size_t backtracks = 0;
  bool moved = false;
};

/// Scalars emitted once per step.
struct StepRecord {
  std::size_t step = 0;
  double time = 0.0;
  EnergyBreakdown energy;
  double residual_mechanical = 0.0;
  double residual_chemical = 0.0;
  double area = 0.0;
  double volume = 0.0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  LineSearchResult shape;
  LineSearchResult protein;
};

enum class TerminationReason { Converged, MaxSteps, Error };

inline std::string to_string(TerminationReason r) {
  switch (r) {
  case TerminationReason::Converged: return "converged";
  case TerminationReason::MaxSteps: return "max_steps";
  case TerminationReason::Error: return "error";
  }
  return "?";
}

struct TerminationReport {
  TerminationReason reason = TerminationReason::MaxSteps;
  double residual = 0.0;
  std::size_t steps = 0;
  double wall_seconds = 0.0;
  std::string message; // set for Error
};

using StepCallback = std::function<void(const System &, const StepRecord &)>;
using RemeshHook = std::function<void(System &)>;

namespace detail {

/// Total energy at trial positions; geometry that the energy cannot be
/// evaluated on counts as +∞ so the line search backs off.
inline double trial_energy(const System &s) {
  try {
    const double e = total_energy(s).total;
    return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
  } catch (const Error &) {
    return std::numeric_limits<double>::infinity();
  }
}

inline double chemical_objective(const System &s, double barrier) {
  try {
    const double e = total_energy(s).total + barrier_energy(s.phi, barrier);
    return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
  } catch (const Error &) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Backtracks x + t·d until E ≤ E0 − c·t·slope. `apply` writes the trial.
template <class Apply, class Energy>
LineSearchResult backtrack(double t0, double e0, double slope, const SolverConfig &cfg, Apply &&apply,
                           Energy &&energy) {
  LineSearchResult res;
  res.energy_before = e0;
  double t = t0;
  for (std::size_t k = 0; k <= cfg.max_backtracks; ++k) {
    apply(t);
    const double e = energy();
    if (e <= e0 - cfg.sufficient_decrease * t * slope) {
      res.step = t;
      res.energy_after = e;
      res.backtracks = k;
      res.moved = true;
      return res;
    }
    t *= cfg.shrink;
  }
  throw Error(ErrorCode::LineSearchFailed, "no sufficient decrease after " +
                                               std::to_string(cfg.max_backtracks) + " backtracks (step " +
                                               std::to_string(t) + ")");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Shape steps.

/// r ← r + (dt/ξ)·∫f⃗_net with backtracking on dt. φ is frozen. The
/// accepted dt advances s.time; state.dt grows after an un-backtracked step.
inline LineSearchResult forward_euler_step(System &s, const SolverConfig &cfg, SolverState &state,
                                           const Evaluation *current = nullptr) {
  const Evaluation ev = current ? *current : evaluate(s, {.forces = true, .potentials = false});
  const VertexMatrix &f = ev.forces.net;
  const double f2 = f.squaredNorm();
  LineSearchResult res;
  res.energy_before = res.energy_after = ev.energy.total;
  if (f2 == 0.0 || !std::isfinite(s.params.xi)) {
    s.time += state.dt;
    res.step = state.dt;
    return res;
  }
  const VertexPositions r0 = s.positions;
  const double xi = s.params.xi;
  res = detail::backtrack(
      state.dt, ev.energy.total, f2 / xi, cfg, [&](double dt) { s.positions = r0 + (dt / xi) * f; },
      [&] { return detail::trial_energy(s); });
  s.time += res.step;
  state.dt = res.backtracks == 0 ? std::min(res.step * cfg.growth, cfg.step_cap()) : res.step;
  return res;
}

/// One Polak–Ribière+ iteration. Every cg_restart_period iterations, or when
/// β ≤ 0 or the direction is not a descent direction, the step is plain
/// gradient descent.
inline LineSearchResult conjugate_gradient_step(System &s, const SolverConfig &cfg, SolverState &state,
                                                const Evaluation &ev) {
  const VertexMatrix &f = ev.forces.net;
  bool restart = state.cg_direction.rows() != f.rows() || cfg.cg_restart_period == 0 ||
                 state.cg_since_restart >= cfg.cg_restart_period;
  double beta = 0.0;
  if (!restart) {
    const double denom = state.cg_previous_force.squaredNorm();
    beta = denom > 0.0 ? f.cwiseProduct(f - state.cg_previous_force).sum() / denom : 0.0;
    if (beta <= 0.0) restart = true;
  }
  VertexMatrix d = restart ? f : VertexMatrix(f + beta * state.cg_direction);
  double slope = f.cwiseProduct(d).sum();
  if (!(slope > 0.0)) {
    d = f;
    slope = f.squaredNorm();
    restart = true;
  }
  state.cg_since_restart = restart ? 1 : state.cg_since_restart + 1;
  const VertexPositions r0 = s.positions;
  LineSearchResult res = detail::backtrack(
      state.dt, ev.energy.total, slope, cfg, [&](double a) { s.positions = r0 + a * d; },
      [&] { return detail::trial_energy(s); });
  state.dt = res.backtracks == 0 ? res.step * cfg.growth : res.step;
  state.cg_direction = std::move(d);
  state.cg_previous_force = f;
  return res;
}

namespace detail {

inline void fill_record(StepRecord &rec, const System &s, const Evaluation &ev, std::size_t step) {
  rec.step = step;
  rec.time = s.time;
  rec.energy = ev.energy;
  rec.residual_mechanical = l2_residual(ev.forces.net);
  rec.residual_chemical = l2_residual(ev.potentials.net);
  rec.area = ev.area;
  rec.volume = ev.volume;
  rec.phi_min = s.phi.size() ? s.phi.minCoeff() : 0.0;
  rec.phi_max = s.phi.size() ? s.phi.maxCoeff() : 0.0;
}

} // namespace detail

/// Nonlinear conjugate gradient on the shape with φ frozen.
inline TerminationReport conjugate_gradient_minimize(System &s, const SolverConfig &cfg,
                                                     const StepCallback &on_step = {},
                                                     const RemeshHook &remesh = {}) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  SolverState state = SolverState::from(cfg);
  TerminationReport report;
  auto finish = [&](TerminationReason why, double residual) {
    report.reason = why;
    report.residual = residual;
    report.steps = state.step;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  };
  try {
    for (;;) {
      const Evaluation ev = evaluate(s, {.forces = true, .potentials = false});
      const double residual = l2_residual(ev.forces.net);
      if (residual <= cfg.tolerance) return finish(TerminationReason::Converged, residual);
      if (state.step >= cfg.max_steps) return finish(TerminationReason::MaxSteps, residual);
      StepRecord rec;
      rec.shape = conjugate_gradient_step(s, cfg, state, ev);
      ++state.step;
      if (on_step && (cfg.output_period == 0 || state.step % cfg.output_period == 0)) {
        detail::fill_record(rec, s, evaluate(s, {.forces = true, .potentials = false}), state.step);
        on_step(s, rec);
      }
      if (remesh && cfg.remesh_period && state.step % cfg.remesh_period == 0) {
        remesh(s);
        state.cg_direction.resize(0, 3); // topology may have changed
      }
    }
  } catch (const Error &e) {
    report.message = e.what();
    return finish(TerminationReason::Error, report.residual);
  }
}

// ---------------------------------------------------------------------------
// Protein dynamics.

/// φ ← φ + dt·B·(μ_net + μ_barrier). With a barrier the step is cut back to
/// a fraction 0.99 of the distance to the bounds and then backtracked on
/// E + barrier; Dirichlet vertices have μ masked to zero and do not move.
/// The barrier strength is halved when it dominates the physical potential
/// at a vertex well inside (0,1).
inline LineSearchResult evolve_protein(System &s, const SolverConfig &cfg, SolverState &state, double dt) {
  LineSearchResult res;
  const double B = s.params.mobility;
  if (B == 0.0 || dt == 0.0) return res;
  const double barrier = state.barrier_strength;
  const Evaluation ev = evaluate(s, {.forces = false, .potentials = true, .barrier_strength = barrier});
  const ChemicalPotential &mu = ev.potentials;
  if (barrier > 0.0) {
    for (Eigen::Index i = 0; i < s.phi.size(); ++i) {
      const double p = s.phi[i];
      if (p < 0.05 || p > 0.95 || mu.barrier[i] == 0.0) continue;
      if (std::abs(mu.barrier[i]) > std::abs(mu.net[i] - mu.barrier[i])) {
        state.barrier_strength *= 0.5;
        break;
      }
    }
  }
  const Eigen::VectorXd delta = dt * B * mu.net;
  const double slope = mu.net.dot(delta); // −dF along the unit step
  const double f0 = ev.energy.total + barrier_energy(s.phi, barrier);
  res.energy_before = res.energy_after = f0;
  if (slope == 0.0) return res;

  double t_max = 1.0;
  if (barrier > 0.0) {
    constexpr double tau = 0.99;
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
      if (delta[i] < 0.0) t_max = std::min(t_max, tau * s.phi[i] / -delta[i]);
      else if (delta[i] > 0.0) t_max = std::min(t_max, tau * (1.0 - s.phi[i]) / delta[i]);
    }
  } else {
    const Eigen::VectorXd next = s.phi + delta;
    if (next.minCoeff() < 0.0 || next.maxCoeff() > 1.0)
      throw Error(ErrorCode::PhiOutOfBounds, "protein step leaves [0,1] with the barrier disabled");
  }
  const Eigen::VectorXd phi0 = s.phi;
  res = detail::backtrack(
      t_max, f0, slope, cfg, [&](double t) { s.phi = phi0 + t * delta; },
      [&] { return detail::chemical_objective(s, barrier); });
  res.step *= dt;
  return res;
}

// ---------------------------------------------------------------------------
// Coupled dynamics.

/// Shape step with φ frozen, then protein step with shape frozen, sharing dt.
inline StepRecord mechanochemical_step(System &s, const SolverConfig &cfg, SolverState &state) {
  StepRecord rec;
  const double dt_before = state.dt;
  if (cfg.freeze_shape) {
    s.time += state.dt;
    rec.shape.step = state.dt;
  } else {
    rec.shape = forward_euler_step(s, cfg, state);
  }
  const double dt = cfg.freeze_shape ? dt_before : rec.shape.step;
  rec.protein = evolve_protein(s, cfg, state, dt);
  if (cfg.freeze_shape) {
    state.dt = rec.protein.moved && rec.protein.step < dt ? rec.protein.step : std::min(dt * cfg.growth, cfg.step_cap());
  } else if (rec.protein.moved && rec.protein.step < dt) {
    state.dt = std::min(state.dt, rec.protein.step);
  }
  ++state.step;
  return rec;
}

/// Runs coupled (or pure shape) dynamics until the residuals fall below the
/// tolerance or max_steps is reached.
inline TerminationReport run_dynamics(System &s, const SolverConfig &cfg, const StepCallback &on_step = {},
                                      const RemeshHook &remesh = {}) {
  cfg.validate();
  s.params.validate();
  const auto start = std::chrono::steady_clock::now();
  SolverState state = SolverState::from(cfg);
  TerminationReport report;
  const bool protein = s.params.mobility > 0.0;
  auto finish = [&](TerminationReason why, double residual) {
    report.reason = why;
    report.residual = residual;
    report.steps = state.step;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  };
  try {
    for (;;) {
      const Evaluation ev =
          evaluate(s, {.forces = !cfg.freeze_shape, .potentials = protein, .barrier_strength = 0.0});
      const double residual = std::max(cfg.freeze_shape ? 0.0 : l2_residual(ev.forces.net),
                                       protein ? l2_residual(ev.potentials.net) : 0.0);
      report.residual = residual;
      if (residual <= cfg.tolerance) return finish(TerminationReason::Converged, residual);
      if (state.step >= cfg.max_steps) return finish(TerminationReason::MaxSteps, residual);
      StepRecord rec;
      if (protein) {
        rec = mechanochemical_step(s, cfg, state);
      } else {
        rec.shape = forward_euler_step(s, cfg, state, &ev);
        ++state.step;
      }
      if (on_step && (cfg.output_period == 0 || state.step % cfg.output_period == 0)) {
        const auto shape = rec.shape, prot = rec.protein;
        detail::fill_record(rec, s,
                            evaluate(s, {.forces = !cfg.freeze_shape, .potentials = protein}), state.step);
        rec.shape = shape;
        rec.protein = prot;
        on_step(s, rec);
      }
      if (remesh && cfg.remesh_period && state.step % cfg.remesh_period == 0) remesh(s);
    }
  } catch (const Error &e) {
    report.message = e.what();
    return finish(TerminationReason::Error, report.residual);
  }
}

} // namespace memddg

// Acceptance run: one PASS/FAIL line per criterion, details indented below.

#include "memddg.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <unistd.h>

using namespace memddg;
using namespace memddg::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string &what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string &what) { notes.push_back("     " + what); }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

System as_system(MeshData m) {
  System s;
  s.mesh = std::move(m.mesh);
  s.positions = std::move(m.positions);
  s.phi = Eigen::VectorXd::Zero(s.positions.rows());
  return s;
}

// ---------------------------------------------------------------------------

Outcome gauss_bonnet() {
  Outcome o;
  std::vector<std::pair<std::string, MeshData>> meshes;
  for (int k = 0; k <= 6; ++k) meshes.emplace_back("icosphere " + std::to_string(k), icosphere(k));
  for (int k = 0; k <= 6; ++k) meshes.emplace_back("spheroid " + std::to_string(k), spheroid(k, 1.0, 0.5));
  meshes.emplace_back("cube", cube());
  meshes.emplace_back("tetrahedron", tetrahedron());
  for (const auto &[name, m] : meshes) {
    const Geometry g = compute_geometry(m.mesh, m.positions);
    const double total = vertex_gaussian_curvature(m.mesh, g).sum();
    const double err = std::abs(total - 4.0 * std::numbers::pi);
    const double tol = 1e-9 * double(m.mesh.n_vertices());
    if (err > tol) o.require(false, name + ": |sum K - 4 pi| = " + sci(err) + " > " + sci(tol));
    else o.note(name + ": " + sci(err));
  }
  return o;
}

Outcome spheroid_convergence() {
  Outcome o;
  const std::vector<int> levels{2, 3, 4, 5};
  const ConvergenceReport r = spheroid_convergence_study(levels);
  o.require(r.reference_discrepancy <= 1e-8, "reference vs quadrature oracle " + sci(r.reference_discrepancy));
  for (const auto &l : r.levels)
    o.require(l.total_gaussian <= 1e-9, "level " + std::to_string(l.subdivisions) + " total Gaussian deviation " + sci(l.total_gaussian));
  for (const char *q : {"area", "volume", "total_mean", "total_mean_squared", "mean_scalar", "gaussian_scalar"})
    o.require(r.slopes.at(q) >= 1.7, std::string(q) + " slope " + sci(r.slopes.at(q)) + " >= 1.7");
  for (const char *q : {"mean_vector", "gaussian_vector"})
    o.require(r.slopes.at(q) >= 1.3, std::string(q) + " slope " + sci(r.slopes.at(q)) + " >= 1.3");
  for (const char *q : {"schlafli_vector", "cotan_laplacian"}) o.note(std::string(q) + " slope " + sci(r.slopes.at(q)) + " (reported only)");
  return o;
}

Outcome force_exactness() {
  Outcome o;
  const auto eps = log_sweep(1e-6, 1e-2, 2);
  for (std::uint64_t seed : {17u, 29u, 41u}) {
    const System s = taylor_test_system(2, seed);
    std::mt19937_64 rng(seed);
    for (TaylorTerm term : kAllTaylorTerms) {
      const TaylorResult r = taylor_exactness(s, term, eps, rng);
      const std::string tag = "seed " + std::to_string(seed) + " " + to_string(term);
      if (term == TaylorTerm::AdsorptionPotential)
        o.require(r.sweep.max_relative <= 1e-12, tag + " max relative remainder " + sci(r.sweep.max_relative));
      else if (term == TaylorTerm::Regularization || term == TaylorTerm::BarrierPotential)
        o.note(tag + " order " + sci(r.sweep.order) + " (not required)");
      else
        o.require(!r.disabled && r.sweep.order >= 1.9, tag + " order " + sci(r.sweep.order));
    }
  }
  return o;
}

Outcome derivative_primitives() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::map<std::string, PrimitiveCheck> worst;
  for (int trial = 0; trial < 100; ++trial) {
    const MeshData m = trial % 2 ? random_fan(rng) : random_diamond(rng);
    for (const auto &c : check_derivative_primitives(m.mesh, m.positions, rng, difference_steps())) {
      auto &w = worst[c.name];
      w.name = c.name;
      w.worst_order = std::min(w.worst_order, c.worst_order);
      w.max_error = std::max(w.max_error, c.max_error);
      w.samples += c.samples;
      w.exact_samples += c.exact_samples;
    }
  }
  for (const char *name : {"grad_edge_length", "grad_dihedral_diagonal", "grad_dihedral_offdiagonal", "grad_area_diagonal",
                           "grad_area_offdiagonal", "mean_curvature_vector", "gaussian_curvature_vector",
                           "schlafli_vector_1", "schlafli_vector_2"}) {
    if (!worst.count(name)) {
      o.require(false, std::string(name) + " never sampled");
      continue;
    }
    const auto &w = worst.at(name);
    o.require(w.passes(1.9), w.name + " worst order " + sci(w.worst_order) + " over " + std::to_string(w.samples) +
                                 " samples (" + std::to_string(w.exact_samples) + " at round-off)");
  }
  return o;
}

/// Cotangent quadratic form built triangle by triangle, independent of the
/// library's Laplacian assembly.
double cotan_form(const MeshData &m, const Eigen::VectorXd &phi) {
  double sum = 0.0;
  for (const auto &t : m.mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const auto o = Eigen::Index(t[k]), i = Eigen::Index(t[(k + 1) % 3]), j = Eigen::Index(t[(k + 2) % 3]);
      const Vec3 u = m.positions.row(i) - m.positions.row(o), v = m.positions.row(j) - m.positions.row(o);
      const double cot = u.dot(v) / u.cross(v).norm();
      const double d = phi[i] - phi[j];
      sum += 0.5 * cot * d * d;
    }
  }
  return sum;
}

Outcome dirichlet_identity() {
  Outcome o;
  std::mt19937_64 rng(77);
  double worst_lib = 0.0, worst_indep = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const MeshData m = trial % 4 == 3 ? random_fan(rng) : noisy_icosphere(1 + trial % 3, 0.08, 100 + std::uint64_t(trial));
    const Eigen::VectorXd phi = random_field(m.mesh.n_vertices(), 0.0, 1.0, rng);
    const double eta = 0.3;
    const Geometry g = compute_geometry(m.mesh, m.positions);
    const double face = dirichlet_energy(m.mesh, m.positions, g, phi, eta);
    const double lib = 0.5 * eta * phi.dot(cotan_laplacian(m.mesh, g) * phi);
    const double indep = 0.5 * eta * cotan_form(m, phi);
    worst_lib = std::max(worst_lib, std::abs(face - lib) / std::abs(lib));
    worst_indep = std::max(worst_indep, std::abs(face - indep) / std::abs(indep));
  }
  o.require(worst_lib <= 1e-12, "face gradients vs (eta/2) phi^T L phi: max relative " + sci(worst_lib));
  o.require(worst_indep <= 1e-12, "face gradients vs per-triangle cotan sum: max relative " + sci(worst_indep));
  return o;
}

Outcome rigid_body() {
  Outcome o;
  RunConfig cfg = make_preset("vesicle-biconcave");
  cfg.mode = RunMode::Dynamics;
  cfg.solver.max_steps = 1000;
  cfg.solver.tolerance = 1e-300; // run the full horizon
  System s = build_system(cfg);
  ScenarioTrace t = begin_trace("closed-vesicle-euler", s, true);
  const RunOutcome out = run_configured(s, cfg, trace_recorder(t));
  t.report = out.report;
  o.require(out.report.reason != TerminationReason::Error, "solver: " + to_string(out.report.reason) + " " + out.report.message);
  o.require(t.samples.size() == 1000, std::to_string(t.samples.size()) + " steps recorded");
  double drift = 0.0, torque = 0.0, force = 0.0;
  Vec3 previous = t.initial_center;
  for (const auto &x : t.samples) {
    drift = std::max(drift, (x.center_of_mass - previous).norm());
    torque = std::max(torque, x.net_torque);
    force = std::max(force, x.net_force);
    previous = x.center_of_mass;
  }
  o.require(drift <= 1e-8, "max center-of-mass drift per step " + sci(drift) + " um");
  o.require(torque <= 1e-10, "max net torque " + sci(torque) + " nN um");
  o.note("max net force " + sci(force) + " nN, total displacement " + sci((previous - t.initial_center).norm()) + " um");
  return o;
}

struct PresetRun {
  ScenarioTrace trace;
  double seconds = 0.0;
};

std::map<std::string, PresetRun> &preset_runs() {
  static std::map<std::string, PresetRun> runs;
  return runs;
}

Outcome preset_scenarios() {
  Outcome o;
  for (const auto &name : preset_names()) {
    const RunConfig cfg = make_preset(name);
    System s = build_system(cfg);
    PresetRun run{begin_trace(name, s), 0.0};
    const auto start = std::chrono::steady_clock::now();
    run.trace.report = run_configured(s, cfg, trace_recorder(run.trace)).report;
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const ScenarioReport rep = scenario_assertions(run.trace);
    for (const auto &c : rep.checks) o.require(c.pass, name + ": " + c.name + " (" + c.detail + ")");
    o.note(name + ": " + to_string(run.trace.report.reason) + " after " + std::to_string(run.trace.report.steps) +
           " steps, " + sci(run.seconds) + " s");
    preset_runs()[name] = std::move(run);
  }
  const auto &runs = preset_runs();
  const AssertionResult h = height_ratio(runs.at("patch-control").trace, runs.at("patch-scaffold").trace);
  o.require(h.pass, "patch-scaffold vs patch-control " + h.name + " (" + h.detail + ")");
  const auto &ves = runs.at("vesicle-biconcave").trace.report;
  o.note("vesicle-biconcave final residual " + sci(ves.residual));
  return o;
}

Outcome protein_bounds() {
  Outcome o;
  auto &runs = preset_runs();
  if (!runs.count("spine-protein")) {
    const RunConfig cfg = make_preset("spine-protein");
    System s = build_system(cfg);
    PresetRun run{begin_trace("spine-protein", s), 0.0};
    run.trace.report = run_configured(s, cfg, trace_recorder(run.trace)).report;
    runs["spine-protein"] = std::move(run);
  }
  const ScenarioTrace &t = runs.at("spine-protein").trace;
  double lo = 1.0, hi = 0.0;
  for (const auto &x : t.samples) {
    lo = std::min(lo, x.record.phi_min);
    hi = std::max(hi, x.record.phi_max);
  }
  o.require(!t.samples.empty(), std::to_string(t.samples.size()) + " steps recorded");
  o.require(t.report.reason != TerminationReason::Error, "solver: " + to_string(t.report.reason));
  o.require(lo > 0.0 && hi < 1.0, "phi range over the trajectory [" + sci(lo) + ", " + sci(hi) + "]");
  return o;
}

Outcome remesh_integrity() {
  Outcome o;
  System s = as_system(noisy_icosphere(2, 0.02, 9));
  std::mt19937_64 rng(12);
  s.phi = random_field(s.mesh.n_vertices(), 0.1, 0.9, rng);
  const System initial = s;
  MutationLog log;
  std::size_t applied = 0, bad_euler = 0, invalid = 0;
  for (int k = 0; k < 10000; ++k) {
    if (random_mutation(s, rng, &log)) ++applied;
    if (s.mesh.euler_characteristic() != 2) ++bad_euler;
    if (k % 50 == 0 || k == 9999) {
      try {
        s.mesh.validate();
      } catch (const Error &) {
        ++invalid;
      }
    }
  }
  o.require(bad_euler == 0, "Euler characteristic 2 after every operation (" + std::to_string(bad_euler) + " violations)");
  o.require(invalid == 0, "manifold validation passes (" + std::to_string(invalid) + " failures)");
  o.require(applied > 1000, std::to_string(applied) + " of 10000 operations applied, " +
                                std::to_string(log.skipped.size()) + " refused and logged");
  // Round trip through the text log before replaying.
  const MutationLog parsed = parse_mutation_log(serialize_mutation_log(log));
  System again = initial;
  replay(again, parsed);
  o.require(again.mesh.triangles() == s.mesh.triangles(), "replayed connectivity identical");
  o.require(again.positions == s.positions && again.phi == s.phi, "replayed positions and phi identical");
  return o;
}

Outcome io_round_trips(const std::filesystem::path &dir) {
  Outcome o;
  std::mt19937_64 rng(5);
  System s = as_system(noisy_icosphere(3, 0.03, 5));
  s.phi = random_field(s.mesh.n_vertices(), 0.0, 1.0, rng);
  for (const char *ext : {".ply", ".obj"}) {
    const std::string path = (dir / (std::string("mesh") + ext)).string();
    write_mesh(path, s.mesh, s.positions, &s.phi);
    Eigen::VectorXd phi;
    const MeshData back = read_mesh(path, &phi);
    bool same = back.mesh.triangles() == s.mesh.triangles() && back.positions == s.positions;
    if (std::string(ext) == ".ply") same = same && phi == s.phi;
    o.require(same, std::string(ext) + " round trip exact");
  }

  // Trajectory with a topology change between frames, plain and gzip.
  for (bool gz : {false, true}) {
    const std::string path = (dir / (gz ? "traj.txt.gz" : "traj.txt")).string();
    System t = s;
    std::vector<System> states;
    {
      TrajectoryWriter w(path, serialize_config(make_preset("bud-hypertonic")), gz);
      for (int k = 0; k < 4; ++k) {
        t.time = 0.5 * k;
        if (k == 2) {
          std::mt19937_64 mr(k);
          for (int n = 0; n < 50; ++n) random_mutation(t, mr);
        }
        t.positions.array() += 1e-3 * k;
        w.write_frame(t, {{"step", double(k)}});
        states.push_back(t);
      }
      w.close();
    }
    const Trajectory tr = read_trajectory(path);
    bool same = tr.frames.size() == states.size();
    for (std::size_t k = 0; same && k < states.size(); ++k) {
      const MeshData fm = frame_mesh(tr.frames[k]);
      same = fm.mesh.triangles() == states[k].mesh.triangles() && fm.positions == states[k].positions &&
             tr.frames[k].phi == states[k].phi && tr.frames[k].time == states[k].time;
    }
    o.require(same, std::string(gz ? "gzip" : "plain") + " trajectory replays every frame exactly");
  }

  bool configs = true;
  for (const auto &name : preset_names()) {
    const std::string text = serialize_config(make_preset(name));
    const RunConfig back = parse_config(text, name);
    if (serialize_config(back) != text || !same_config(back, make_preset(name))) {
      configs = false;
      o.note(name + " config differs after round trip");
    }
  }
  o.require(configs, "every preset config round-trips bit-identically");
  return o;
}

} // namespace

int main() {
  const auto dir = std::filesystem::temp_directory_path() / ("memddg_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Gauss-Bonnet exactness", gauss_bonnet},
      {"spheroid convergence", spheroid_convergence},
      {"force exactness", force_exactness},
      {"derivative primitives", derivative_primitives},
      {"Dirichlet dual computation", dirichlet_identity},
      {"rigid-body cleanliness", rigid_body},
      {"monotone descent and preset outcomes", preset_scenarios},
      {"protein bounds", protein_bounds},
      {"remeshing integrity", remesh_integrity},
      {"I/O round trips", [&] { return io_round_trips(dir); }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto &[name, run] = criteria[k];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto &n : o.notes) std::cout << "    " << n << '\n';
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << ": " << name << " (" << sci(secs) << " s)"
              << std::endl;
    failures += !o.pass;
  }
  std::filesystem::remove_all(dir);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failures ? 1 : 0;
}

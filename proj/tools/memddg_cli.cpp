// memddg command-line front end.

#include "memddg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace memddg;

namespace {

using io_detail::format_double;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAssertion = 3;

struct Common {
  std::string config, preset, out, mesh;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool quiet = false, strict = false;
};

void add_common(CLI::App *app, Common &c, bool with_mesh = false) {
  app->add_option("--config", c.config, "Configuration file");
  app->add_option("--preset", c.preset, "Named preset (overridden by --config keys)");
  app->add_option("--out", c.out, "Output path");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--threads", c.threads, "Worker threads (default: MEMDDG_THREADS or 1)");
  app->add_flag("--quiet", c.quiet, "Suppress progress output");
  app->add_flag("--strict", c.strict, "Exit nonzero when an assertion fails");
  if (with_mesh) app->add_option("--mesh", c.mesh, "Mesh file (PLY or OBJ) instead of a configured mesh");
}

RunConfig load_config(const Common &c) {
  RunConfig cfg;
  if (!c.config.empty()) {
    cfg = read_config(c.config);
    if (!c.preset.empty() && cfg.preset != c.preset)
      throw Error(ErrorCode::InvalidParams, "--preset " + c.preset + " conflicts with the preset named in " + c.config);
  } else if (!c.preset.empty()) {
    cfg = make_preset(c.preset);
  } else {
    throw Error(ErrorCode::MissingRequired, "give --config or --preset");
  }
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

System load_system(const Common &c) {
  if (!c.mesh.empty()) {
    RunConfig cfg;
    if (!c.config.empty() || !c.preset.empty()) cfg = load_config(c);
    cfg.mesh = {};
    cfg.mesh.kind = MeshKind::File;
    cfg.mesh.path = c.mesh;
    return build_system(cfg);
  }
  return build_system(load_config(c));
}

void log(const Common &c, const std::string &msg) {
  if (!c.quiet) std::cerr << msg << '\n';
}

/// Writes `text` to --out when set, else to stdout.
void emit(const Common &c, const std::string &text, const std::string &default_name) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  fs::path p(c.out);
  if (fs::is_directory(p)) p /= default_name;
  io_detail::write_text(p.string(), text);
  log(c, "wrote " + p.string());
}

void print_kv(const std::vector<std::pair<std::string, double>> &rows) {
  for (const auto &[k, v] : rows) std::cout << k << ' ' << format_double(v) << '\n';
}

// ---------------------------------------------------------------------------

int cmd_generate(const Common &c, const std::string &kind, int subdivisions) {
  if (c.out.empty()) throw Error(ErrorCode::MissingRequired, "generate needs --out <file.ply|file.obj>");
  System s;
  if (!kind.empty()) {
    RunConfig cfg;
    const auto w = "--kind";
    cfg.mesh.kind = config_detail::to_enum(kind, w, config_detail::kMeshKinds);
    if (subdivisions >= 0) cfg.mesh.subdivisions = subdivisions;
    if (cfg.mesh.kind == MeshKind::Tube) {
      cfg.mesh.length = 19.9;
      cfg.mesh.n_rings = 60;
    }
    s = build_system(cfg);
  } else {
    RunConfig cfg = load_config(c);
    if (subdivisions >= 0) cfg.mesh.subdivisions = subdivisions;
    s = build_system(cfg);
  }
  const bool with_phi = io_detail::format_from_path(c.out) == MeshFormat::Ply;
  write_mesh(c.out, s.mesh, s.positions, with_phi ? &s.phi : nullptr);
  log(c, "wrote " + c.out + " (" + std::to_string(s.mesh.n_vertices()) + " vertices, " +
             std::to_string(s.mesh.n_faces()) + " faces)");
  return 0;
}

int cmd_energy(const Common &c) {
  const System s = load_system(c);
  const Evaluation ev = evaluate(s, {.forces = false, .potentials = false});
  const EnergyBreakdown &e = ev.energy;
  print_kv({{"E_bending", e.bending},
            {"E_stretching", e.stretching},
            {"E_pressure", e.pressure},
            {"E_dirichlet", e.dirichlet},
            {"E_adsorption", e.adsorption},
            {"E_regularization", e.regularization},
            {"E_external", e.external},
            {"E_total", e.total},
            {"area", ev.area},
            {"volume", ev.volume},
            {"tension", ev.tension},
            {"pressure", ev.pressure}});
  return 0;
}

int cmd_forces(const Common &c, const std::string &dump) {
  const System s = load_system(c);
  const Evaluation ev = evaluate(s, {.forces = true, .potentials = true});
  const ForceBreakdown &f = ev.forces;
  const std::vector<std::pair<std::string, const VertexMatrix *>> terms{
      {"f_b", &f.bending},    {"f_s", &f.stretching},        {"f_p", &f.pressure}, {"f_d", &f.dirichlet},
      {"f_a", &f.adsorption}, {"f_reg", &f.regularization}, {"f_ext", &f.external}, {"f_net", &f.net}};
  std::cout << "term,l2,max_norm,sum_x,sum_y,sum_z\n";
  for (const auto &[name, m] : terms) {
    const Vec3 sum = m->rows() ? Vec3(m->colwise().sum().transpose()) : Vec3::Zero();
    const double mx = m->rows() ? m->rowwise().norm().maxCoeff() : 0.0;
    std::cout << name << ',' << format_double(l2_residual(*m)) << ',' << format_double(mx) << ','
              << format_double(sum.x()) << ',' << format_double(sum.y()) << ',' << format_double(sum.z()) << '\n';
  }
  std::cout << "mu_net," << format_double(l2_residual(ev.potentials.net)) << ",,,,\n";
  if (!dump.empty()) {
    std::vector<std::string> header{"vertex", "x", "y", "z", "phi"};
    for (const auto &[name, m] : terms)
      for (const char *axis : {"_x", "_y", "_z"}) header.push_back(name + axis);
    header.push_back("mu_net");
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index i = 0; i < s.positions.rows(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (int k = 0; k < 3; ++k) row.push_back(format_double(s.positions(i, k)));
      row.push_back(format_double(s.phi[i]));
      for (const auto &[name, m] : terms)
        for (int k = 0; k < 3; ++k) row.push_back(format_double((*m)(i, k)));
      row.push_back(format_double(ev.potentials.net.size() ? ev.potentials.net[i] : 0.0));
      rows.push_back(std::move(row));
    }
    io_detail::write_text(dump, csv_table(header, rows));
    log(c, "wrote " + dump);
  }
  return 0;
}

struct RunOptions {
  bool gzip = false;
  std::size_t frame_period = 100;
  std::optional<std::size_t> max_steps;
};

int cmd_run(const Common &c, const RunOptions &o, bool minimize) {
  if (c.out.empty()) throw Error(ErrorCode::MissingRequired, "--out <dir> is required");
  RunConfig cfg = load_config(c);
  if (minimize) cfg.mode = RunMode::Minimize;
  if (o.max_steps) cfg.solver.max_steps = *o.max_steps;
  const fs::path dir(c.out);
  fs::create_directories(dir);

  const std::string config_text = serialize_config(cfg);
  io_detail::write_text((dir / "config.cfg").string(), config_text);
  System s = build_system(cfg);
  MutationLog mutations;
  const std::string traj_name = o.gzip ? "trajectory.txt.gz" : "trajectory.txt";
  TrajectoryWriter traj((dir / traj_name).string(), config_text, o.gzip, "mutations.txt");
  std::string csv = csv_header();

  ScenarioTrace trace = begin_trace(cfg.preset, s);
  const StepCallback record_trace = trace_recorder(trace);
  StepRecord initial;
  detail::fill_record(initial, s, evaluate(s), 0);
  traj.write_frame(s, summary_of(initial));
  csv += csv_row(initial);

  std::size_t records = 0, last_frame_step = 0;
  const StepCallback on_step = [&](const System &sys, const StepRecord &rec) {
    csv += csv_row(rec);
    record_trace(sys, rec);
    if (o.frame_period && ++records % o.frame_period == 0) {
      traj.write_frame(sys, summary_of(rec));
      last_frame_step = rec.step;
    }
    if (!c.quiet && rec.step % 100 == 0)
      std::cerr << "step " << rec.step << " E=" << format_double(rec.energy.total)
                << " |f|=" << format_double(rec.residual_mechanical) << '\n';
  };
  const RunOutcome out = run_configured(s, cfg, on_step, &mutations);
  trace.report = out.report;

  // Final state: the last callback may predate a remesh pass or the last step.
  const bool remeshed_at_end = cfg.solver.remesh_period && out.report.steps % cfg.solver.remesh_period == 0;
  if (last_frame_step != out.report.steps || remeshed_at_end || out.report.steps == 0) {
    StepRecord fin;
    detail::fill_record(fin, s, evaluate(s), out.report.steps);
    traj.write_frame(s, summary_of(fin));
  }
  traj.close();
  io_detail::write_text((dir / "scalars.csv").string(), csv);
  io_detail::write_text((dir / "mutations.txt").string(), serialize_mutation_log(mutations));

  std::cout << "termination " << to_string(out.report.reason) << '\n'
            << "steps " << out.report.steps << '\n'
            << "residual " << format_double(out.report.residual) << '\n'
            << "frames " << traj.frames() << '\n'
            << "wall_seconds " << format_double(out.report.wall_seconds) << '\n';
  if (out.report.reason == TerminationReason::Error) {
    std::cerr << "error: " << out.report.message << '\n';
    return kExitError;
  }
  const ScenarioReport rep = scenario_assertions(trace);
  std::vector<std::vector<std::string>> rows;
  for (const auto &chk : rep.checks) {
    rows.push_back({chk.name, chk.pass ? "pass" : "fail", chk.detail});
    if (!c.quiet) std::cerr << (chk.pass ? "PASS " : "FAIL ") << chk.name << ": " << chk.detail << '\n';
  }
  io_detail::write_text((dir / "assertions.csv").string(), csv_table({"check", "result", "detail"}, rows));
  return c.strict && !rep.passed() ? kExitAssertion : 0;
}

int cmd_gradcheck(const Common &c, int subdivisions, double eps_lo, double eps_hi) {
  const std::uint64_t seed = c.seed.value_or(17);
  System s = (!c.config.empty() || !c.preset.empty()) ? load_system(c) : taylor_test_system(subdivisions, seed);
  if (!(eps_lo > 0.0 && eps_hi > eps_lo)) throw Error(ErrorCode::InvalidParams, "need 0 < eps-min < eps-max");
  const auto eps = log_sweep(eps_lo, eps_hi, 2);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> rows;
  bool ok = true;
  for (TaylorTerm term : kAllTaylorTerms) {
    const TaylorResult r = taylor_exactness(s, term, eps, rng);
    const bool exact = r.exact();
    const bool required = term != TaylorTerm::Regularization && term != TaylorTerm::BarrierPotential;
    const bool pass = r.disabled || (term == TaylorTerm::AdsorptionPotential ? exact : exact || r.sweep.order >= 1.9);
    if (required && !pass) ok = false;
    for (std::size_t k = 0; k < r.sweep.eps.size(); ++k)
      rows.push_back({to_string(term), format_double(r.sweep.eps[k]), format_double(r.sweep.remainder[k]),
                      format_double(r.sweep.order), exact ? "true" : "false", r.disabled ? "true" : "false"});
    if (!c.quiet)
      std::cerr << to_string(term) << " order " << format_double(r.sweep.order) << " max_relative "
                << format_double(r.sweep.max_relative) << (r.disabled ? " (disabled)" : exact ? " (exact)" : "") << '\n';
  }
  emit(c, csv_table({"term", "eps", "remainder", "order", "exact", "disabled"}, rows), "gradcheck.csv");
  return c.strict && !ok ? kExitAssertion : 0;
}

int cmd_benchmark(const Common &c, int levels, int first, double a, double axis_c) {
  if (levels < first + 2) throw Error(ErrorCode::InvalidParams, "--levels must give at least three levels");
  std::vector<int> subs;
  for (int k = first; k <= levels; ++k) subs.push_back(k);
  const ConvergenceReport r = spheroid_convergence_study(subs, a, axis_c);

  std::vector<std::string> header{"subdivisions", "vertices"};
  for (const auto &col : ConvergenceReport::columns()) header.push_back(col);
  std::vector<std::vector<std::string>> rows;
  for (const auto &l : r.levels) {
    std::vector<std::string> row{std::to_string(l.subdivisions), std::to_string(l.vertices)};
    for (double v : ConvergenceReport::values(l)) row.push_back(format_double(v));
    rows.push_back(std::move(row));
  }
  std::vector<std::vector<std::string>> slope_rows;
  for (const auto &[name, slope] : r.slopes) slope_rows.push_back({name, format_double(slope)});

  const std::string levels_csv = csv_table(header, rows), slopes_csv = csv_table({"quantity", "slope"}, slope_rows);
  if (!c.out.empty()) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    io_detail::write_text((dir / "convergence.csv").string(), levels_csv);
    io_detail::write_text((dir / "slopes.csv").string(), slopes_csv);
    for (int k : subs) {
      const PointwiseTable t = spheroid_pointwise(k, SpheroidReference{a, axis_c});
      std::vector<std::vector<std::string>> cells;
      for (const auto &row : t.rows) {
        std::vector<std::string> cell{std::to_string(static_cast<long>(row[0]))};
        for (std::size_t j = 1; j < row.size(); ++j) cell.push_back(format_double(row[j]));
        cells.push_back(std::move(cell));
      }
      io_detail::write_text((dir / ("pointwise_level" + std::to_string(k) + ".csv")).string(), csv_table(t.columns, cells));
    }
    log(c, "wrote convergence.csv, slopes.csv and pointwise_level*.csv to " + dir.string());
  } else {
    std::cout << levels_csv << '\n' << slopes_csv;
  }

  bool ok = r.reference_discrepancy <= 1e-8;
  for (const auto &l : r.levels) ok = ok && l.total_gaussian <= 1e-9;
  for (const char *q : {"area", "volume", "total_mean", "total_mean_squared", "mean_scalar", "gaussian_scalar"})
    ok = ok && r.slopes.count(q) && r.slopes.at(q) >= 1.7;
  for (const char *q : {"mean_vector", "gaussian_vector"}) ok = ok && r.slopes.count(q) && r.slopes.at(q) >= 1.3;
  log(c, std::string("convergence thresholds ") + (ok ? "met" : "NOT met"));
  return c.strict && !ok ? kExitAssertion : 0;
}

int cmd_info(const Common &c) {
  const System s = load_system(c);
  const HalfedgeMesh &m = s.mesh;
  m.validate();
  const Geometry g = compute_geometry(m, s.positions);
  std::cout << "vertices " << m.n_vertices() << '\n'
            << "edges " << m.n_edges() << '\n'
            << "faces " << m.n_faces() << '\n'
            << "euler_characteristic " << m.euler_characteristic() << '\n'
            << "boundary_loops " << m.boundary_loops().size() << '\n'
            << "closed " << (m.is_closed() ? "true" : "false") << '\n'
            << "area " << format_double(total_area(m, s.positions)) << '\n';
  if (m.is_closed()) std::cout << "volume " << format_double(enclosed_volume(m, s.positions)) << '\n';
  const double total_k = vertex_gaussian_curvature(m, g).sum();
  std::cout << "total_gaussian_curvature " << format_double(total_k) << '\n';

  // Aspect ratio histogram, equilateral = 1.
  const std::vector<double> edges{1.0, 1.5, 2.0, 3.0, 5.0, 10.0};
  std::vector<std::size_t> counts(edges.size(), 0);
  double worst = 0.0;
  for (const auto &t : m.triangles()) {
    const double ar = remesh_detail::aspect_ratio(s.positions.row(Eigen::Index(t[0])).transpose(),
                                                  s.positions.row(Eigen::Index(t[1])).transpose(),
                                                  s.positions.row(Eigen::Index(t[2])).transpose());
    worst = std::max(worst, ar);
    std::size_t bin = 0;
    while (bin + 1 < edges.size() && ar >= edges[bin + 1]) ++bin;
    ++counts[bin];
  }
  std::cout << "aspect_ratio_max " << format_double(worst) << '\n';
  for (std::size_t b = 0; b < edges.size(); ++b) {
    const std::string hi = b + 1 < edges.size() ? format_double(edges[b + 1]) : "inf";
    std::cout << "aspect_ratio [" << format_double(edges[b]) << ',' << hi << ") " << counts[b] << '\n';
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"memddg: mechanochemical membrane simulation on triangle meshes"};
  app.require_subcommand(1);
  Common common;

  auto *generate = app.add_subcommand("generate", "Write a generated or configured mesh");
  std::string kind;
  int subdivisions = -1;
  add_common(generate, common);
  generate->add_option("--kind", kind, "icosphere, spheroid, tube, patch or bump (default: from config)");
  generate->add_option("--subdivisions", subdivisions, "Subdivision level for spheres and spheroids");

  auto *energy = app.add_subcommand("energy", "Print the energy breakdown");
  add_common(energy, common, true);

  auto *forces = app.add_subcommand("forces", "Print per-term force summaries");
  std::string dump;
  add_common(forces, common, true);
  forces->add_option("--dump", dump, "Per-vertex CSV of every force term");

  RunOptions run_opts;
  auto *run = app.add_subcommand("run", "Run the configured solver and write a trajectory");
  auto *minimize = app.add_subcommand("minimize", "Minimize the shape energy with conjugate gradients");
  for (auto *sub : {run, minimize}) {
    add_common(sub, common);
    sub->add_flag("--gzip", run_opts.gzip, "Compress the trajectory");
    sub->add_option("--frame-period", run_opts.frame_period, "Trajectory frame every N recorded steps (0: first and last only)");
    sub->add_option("--max-steps", run_opts.max_steps, "Override the solver step limit");
  }

  auto *gradcheck = app.add_subcommand("gradcheck", "Taylor remainder study of every force and potential");
  int grad_subdivisions = 2;
  double eps_lo = 1e-6, eps_hi = 1e-2;
  add_common(gradcheck, common, true);
  gradcheck->add_option("--subdivisions", grad_subdivisions, "Icosphere level of the default randomized test system");
  gradcheck->add_option("--eps-min", eps_lo, "Smallest perturbation");
  gradcheck->add_option("--eps-max", eps_hi, "Largest perturbation");

  auto *benchmark = app.add_subcommand("benchmark", "Spheroid convergence study");
  int levels = 5, first_level = 1;
  double axis_a = 1.0, axis_c = 0.5;
  add_common(benchmark, common);
  benchmark->add_option("--levels", levels, "Finest subdivision level");
  benchmark->add_option("--first", first_level, "Coarsest subdivision level");
  benchmark->add_option("--axis-a", axis_a, "Equatorial semi-axis");
  benchmark->add_option("--axis-c", axis_c, "Polar semi-axis");

  auto *info = app.add_subcommand("info", "Validate and summarize a mesh");
  add_common(info, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: UsageError: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (common.threads > 0) set_thread_count(common.threads);
    if (*generate) return cmd_generate(common, kind, subdivisions);
    if (*energy) return cmd_energy(common);
    if (*forces) return cmd_forces(common, dump);
    if (*run) return cmd_run(common, run_opts, false);
    if (*minimize) return cmd_run(common, run_opts, true);
    if (*gradcheck) return cmd_gradcheck(common, grad_subdivisions, eps_lo, eps_hi);
    if (*benchmark) return cmd_benchmark(common, levels, first_level, axis_a, axis_c);
    if (*info) return cmd_info(common);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception &e) {
    std::cerr << "error: IoError: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

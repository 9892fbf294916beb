#include "memddg/io.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <clocale>
#include <filesystem>

using namespace memddg;
using namespace memddg::testing;
using Catch::Approx;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "memddg_test_io";
  std::filesystem::create_directories(dir);
  return dir;
}

std::optional<ErrorCode> code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return std::nullopt;
}

std::string message_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.what();
  }
  return {};
}

System small_system(std::uint64_t seed) {
  MeshData m = noisy_icosphere(2, 0.02, seed);
  System s;
  s.mesh = std::move(m.mesh);
  s.positions = std::move(m.positions);
  std::mt19937_64 rng(seed);
  s.phi = random_field(s.mesh.n_vertices(), 0.0, 1.0, rng);
  return s;
}

} // namespace

// ---------------------------------------------------------------------------
// Meshes.

TEST_CASE("generators") {
  const MeshData ico = icosphere(0);
  CHECK(ico.mesh.n_vertices() == 12);
  CHECK(ico.mesh.n_edges() == 30);
  CHECK(ico.mesh.n_faces() == 20);

  MeshSpec tube_spec;
  tube_spec.kind = MeshKind::Tube;
  tube_spec.radius = 1.0;
  tube_spec.length = 19.9;
  tube_spec.n_rings = 20;
  const MeshData t = generate_mesh(tube_spec);
  CHECK(t.mesh.boundary_loops().size() == 2);
  CHECK(t.mesh.euler_characteristic() == 0);

  MeshSpec patch_spec;
  patch_spec.kind = MeshKind::HexPatch;
  const MeshData p = generate_mesh(patch_spec);
  CHECK(p.mesh.boundary_loops().size() == 1);
  CHECK(p.mesh.euler_characteristic() == 1);

  MeshSpec bad;
  bad.subdivisions = 11;
  CHECK(code_of([&] { generate_mesh(bad); }) == ErrorCode::InvalidParams);
}

TEST_CASE("PLY round trip keeps positions, connectivity and phi") {
  const System s = small_system(3);
  const std::string text = mesh_to_ply(s.mesh, s.positions, &s.phi);
  Eigen::VectorXd phi;
  const MeshData back = mesh_from_ply(text, &phi);
  CHECK(back.mesh.triangles() == s.mesh.triangles());
  CHECK(back.positions == s.positions);
  CHECK(phi == s.phi);

  const auto path = (scratch_dir() / "ico.ply").string();
  write_mesh(path, s.mesh, s.positions, &s.phi);
  Eigen::VectorXd phi2;
  const MeshData file = read_mesh(path, &phi2);
  CHECK(file.positions == s.positions);
  CHECK(phi2 == s.phi);
}

TEST_CASE("PLY without phi leaves phi empty") {
  const MeshData ico = icosphere(1);
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(3);
  mesh_from_ply(mesh_to_ply(ico.mesh, ico.positions), &phi);
  CHECK(phi.size() == 0);
}

TEST_CASE("OBJ round trip") {
  const MeshData ico = noisy_icosphere(2, 0.05, 5);
  const MeshData back = mesh_from_obj(mesh_to_obj(ico.mesh, ico.positions));
  CHECK(back.mesh.triangles() == ico.mesh.triangles());
  CHECK(back.positions == ico.positions);
}

TEST_CASE("OBJ slash syntax and negative indices") {
  const std::string text = "# tetra\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
                           "vn 0 0 1\nf 1/1/1 3/1/1 2/1/1\nf 1//1 2//1 4//1\nf -3 -2 -1\nf 1 4 3\n";
  const MeshData m = mesh_from_obj(text);
  CHECK(m.mesh.n_faces() == 4);
  CHECK(m.mesh.is_closed());
}

TEST_CASE("quad faces are parse errors with a line number") {
  const std::string obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
  CHECK(code_of([&] { mesh_from_obj(obj, "quad.obj"); }) == ErrorCode::ParseError);
  CHECK(message_of([&] { mesh_from_obj(obj, "quad.obj"); }).find("quad.obj:5:") != std::string::npos);

  const std::string ply = "ply\nformat ascii 1.0\nelement vertex 4\nproperty double x\nproperty double y\n"
                          "property double z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
                          "0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
  CHECK(code_of([&] { mesh_from_ply(ply); }) == ErrorCode::ParseError);
  CHECK(message_of([&] { mesh_from_ply(ply, nullptr, "q.ply"); }).find("q.ply:14:") != std::string::npos);
}

TEST_CASE("binary PLY and missing files are rejected") {
  CHECK(code_of([] { mesh_from_ply("ply\nformat binary_little_endian 1.0\nend_header\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_mesh("/nonexistent/mesh.ply"); }) == ErrorCode::IoError);
  CHECK(code_of([] { read_mesh("mesh.stl"); }) == ErrorCode::IoError);
}

// ---------------------------------------------------------------------------
// Configuration.

TEST_CASE("a preset alone gives the full preset configuration") {
  const RunConfig c = parse_config("preset = \"bud-hypertonic\"\n");
  CHECK(serialize_config(c) == serialize_config(make_preset("bud-hypertonic")));
  CHECK(c.params.preferred_volume == 2.91);
}

TEST_CASE("overrides change only the named key") {
  const RunConfig base = make_preset("bud-hypertonic");
  const RunConfig c = parse_config("preset = bud-hypertonic  # base\n[membrane]\neta = 0.25\n");
  CHECK(c.params.eta == 0.25);
  RunConfig expect = base;
  expect.params.eta = 0.25;
  CHECK(serialize_config(c) == serialize_config(expect));
}

TEST_CASE("configuration errors name the line") {
  const std::string negative = "preset = patch-control\n\n[membrane]\nkappa_b = -1\n";
  CHECK(code_of([&] { parse_config(negative, "a.cfg"); }) == ErrorCode::TypeError);
  CHECK(message_of([&] { parse_config(negative, "a.cfg"); }).find("a.cfg:4") != std::string::npos);

  const std::string unknown = "preset = patch-control\n[membrane]\nkappa_q = 1\n";
  CHECK(code_of([&] { parse_config(unknown, "b.cfg"); }) == ErrorCode::UnknownKey);
  CHECK(message_of([&] { parse_config(unknown, "b.cfg"); }).find("b.cfg:3") != std::string::npos);

  CHECK(code_of([] { parse_config("[nowhere]\n"); }) == ErrorCode::UnknownKey);
  CHECK(code_of([] { parse_config("preset = patch-control\n[solver]\nmax_steps = many\n"); }) == ErrorCode::TypeError);
  CHECK(code_of([] { parse_config("preset = patch-control\n[remesh]\nflip = maybe\n"); }) == ErrorCode::TypeError);
  CHECK(code_of([] { parse_config("preset = patch-control\n[membrane]\npressure_law = boyle\n"); }) == ErrorCode::TypeError);
  CHECK(code_of([] { parse_config("preset = nope\n"); }) == ErrorCode::UnknownPreset);
  CHECK(code_of([] { parse_config("[mesh]\nkind = icosphere\n"); }) == ErrorCode::MissingRequired);
  CHECK(code_of([] { parse_config("mode = minimize\n"); }) == ErrorCode::MissingRequired);
  CHECK(code_of([] { parse_config("mode = minimize\n[mesh]\nkind = file\n"); }) == ErrorCode::MissingRequired);
  CHECK(code_of([] { parse_config("preset = patch-control\njunk line\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("standalone configuration with none, inf and quotes") {
  const std::string text = "mode = dynamics\nseed = 42\n[mesh]\nkind = icosphere\nsubdivisions = 2\n"
                           "path = \"a # b.ply\"\n[membrane]\nfixed_tension = none\nxi = inf\n"
                           "[boundary]\nprotein_dirichlet = none\naxis = 0 0 1\n";
  const RunConfig c = parse_config(text);
  CHECK(c.seed == 42);
  CHECK(c.mesh.subdivisions == 2);
  CHECK(c.mesh.path == "a # b.ply");
  CHECK_FALSE(c.params.fixed_tension.has_value());
  CHECK(std::isinf(c.params.xi));
  CHECK(c.preset.empty());
  const RunConfig back = parse_config(serialize_config(c));
  CHECK(serialize_config(back) == serialize_config(c));
  CHECK(std::isinf(back.params.xi));
}

TEST_CASE("configuration round trip is bit-exact for awkward doubles") {
  RunConfig c = make_preset("patch-control");
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(1e-9, 1.0);
  for (int k = 0; k < 50; ++k) {
    c.params.kappa_b = u(rng);
    c.params.curvature_c = -u(rng) * 1e3;
    c.solver.tolerance = u(rng) * 1e-12;
    c.protein.center = Vec3(u(rng), -u(rng), 0.1 + 0.2);
    const RunConfig back = parse_config(serialize_config(c));
    CHECK(back.params.kappa_b == c.params.kappa_b);
    CHECK(back.params.curvature_c == c.params.curvature_c);
    CHECK(back.solver.tolerance == c.solver.tolerance);
    CHECK(back.protein.center == c.protein.center);
  }
}

// ---------------------------------------------------------------------------
// Trajectories.

TEST_CASE("trajectory frames replay without external state") {
  for (bool gzip : {false, true}) {
    INFO("gzip " << gzip);
    const auto path = (scratch_dir() / (gzip ? "traj.gz" : "traj.txt")).string();
    System s = small_system(11);
    const std::string cfg = serialize_config(make_preset("bud-isotonic"));
    std::vector<System> snapshots;
    {
      TrajectoryWriter w(path, cfg, gzip, "mutations.txt");
      for (int k = 0; k < 4; ++k) {
        if (k == 2) {
          // Topology change between frames 1 and 2.
          RemeshConfig rc;
          rc.max_edge_length = 0.2;
          remesh_pass(s, rc);
        }
        s.time = 0.5 * k;
        s.positions.col(0).array() += 0.01 * k;
        w.write_frame(s, {{"E_total", 1.0 / 3.0 + k}});
        snapshots.push_back(s);
      }
    }
    std::string raw;
    {
      std::ifstream in(path, std::ios::binary);
      raw.assign(std::istreambuf_iterator<char>(in), {});
    }
    CHECK((static_cast<unsigned char>(raw[0]) == 0x1f && static_cast<unsigned char>(raw[1]) == 0x8b) == gzip);

    const Trajectory tr = read_trajectory(path);
    CHECK(tr.config_text == cfg);
    CHECK(tr.mutation_log == "mutations.txt");
    REQUIRE(tr.frames.size() == 4);
    CHECK_FALSE(tr.frames[0].topology_ref.has_value());
    CHECK(tr.frames[1].topology_ref == std::optional<std::size_t>(0));
    CHECK_FALSE(tr.frames[2].topology_ref.has_value());
    CHECK(tr.frames[3].topology_ref == std::optional<std::size_t>(2));
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(tr.frames[k].time == snapshots[k].time);
      CHECK(tr.frames[k].positions == snapshots[k].positions);
      CHECK(tr.frames[k].phi == snapshots[k].phi);
      CHECK(tr.frames[k].triangles == snapshots[k].mesh.triangles());
      CHECK(tr.frames[k].summary.at("E_total") == 1.0 / 3.0 + double(k));
      const MeshData m = frame_mesh(tr.frames[k]);
      CHECK(m.mesh.n_vertices() == snapshots[k].mesh.n_vertices());
    }
    CHECK(parse_config(tr.config_text).params.preferred_volume == 3.95);
  }
}

TEST_CASE("malformed trajectories are parse errors") {
  CHECK(code_of([] { parse_trajectory("hello\n"); }) == ErrorCode::ParseError);
  const std::string head = "memddg-trajectory 1\nunits x\nmutation_log none\nconfig 0\n";
  CHECK(code_of([&] { parse_trajectory(head + "frame 0 t=0 nv=1 nf=0\ntopology_ref 0\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] {
          parse_trajectory(head + "frame 0 t=1 nv=0 nf=0\ntopology\nvertices\nsummary\nend_frame\n"
                                  "frame 1 t=0 nv=0 nf=0\ntopology\nvertices\nsummary\nend_frame\n");
        }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_trajectory("/nonexistent/t.txt"); }) == ErrorCode::IoError);
}

// ---------------------------------------------------------------------------
// CSV and mutation logs.

TEST_CASE("CSV ignores the C locale") {
  StepRecord r;
  r.step = 7;
  r.time = 0.125;
  r.energy.total = -1.5e-7;
  const std::string before = csv_row(r);
  const char *set = std::setlocale(LC_NUMERIC, "de_DE.UTF-8");
  const std::string during = csv_row(r);
  std::setlocale(LC_NUMERIC, "C");
  CHECK(before == during);
  CHECK(before.rfind("7,0.125,-1.5e-07,", 0) == 0);
  CHECK(std::count(before.begin(), before.end(), ',') + 1 == long(csv_columns().size()));
  const std::string header = csv_header();
  CHECK(std::count(header.begin(), header.end(), ',') + 1 == long(csv_columns().size()));
  (void)set;
}

TEST_CASE("CSV cells with separators are quoted") {
  CHECK(csv_cell("plain") == "plain");
  CHECK(csv_cell("a, b") == "\"a, b\"");
  CHECK(csv_cell("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_table({"k", "v"}, {{"x", "1,2"}}) == "k,v\nx,\"1,2\"\n");
}

TEST_CASE("mutation log round trip") {
  System s = small_system(4);
  MutationLog log;
  RemeshConfig rc;
  rc.max_edge_length = 0.15;
  rc.shift = true;
  remesh_pass(s, rc, &log);
  REQUIRE_FALSE(log.applied.empty());
  const MutationLog back = parse_mutation_log(serialize_mutation_log(log));
  REQUIRE(back.applied.size() == log.applied.size());
  REQUIRE(back.skipped.size() == log.skipped.size());
  for (std::size_t i = 0; i < log.applied.size(); ++i) {
    CHECK(back.applied[i].kind == log.applied[i].kind);
    CHECK(back.applied[i].element == log.applied[i].element);
    CHECK(back.applied[i].position == log.applied[i].position);
    CHECK(back.applied[i].phi == log.applied[i].phi);
  }
  for (std::size_t i = 0; i < log.skipped.size(); ++i) CHECK(back.skipped[i].reason == log.skipped[i].reason);
  CHECK(code_of([] { parse_mutation_log("memddg-mutations 1\napplied 1\nteleport 0 0 0 0 0\nskipped 0\n"); }) ==
        ErrorCode::ParseError);
}

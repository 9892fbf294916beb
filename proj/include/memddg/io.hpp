#pragma once

#include "memddg/presets.hpp"

#include <zlib.h>

#include <functional>
#include <map>

namespace memddg {

// ---------------------------------------------------------------------------
// Configuration files: `key = value` lines grouped under `[section]` headers.
// '#' starts a comment. A top-level `preset = name` seeds every value, and the
// remaining keys override it one by one.

namespace config_detail {

struct Field {
  std::string section, key;
  std::function<void(RunConfig &, const std::string &value, const std::string &where)> set;
  std::function<std::string(const RunConfig &)> get;
};

[[noreturn]] inline void type_error(const std::string &where, const std::string &what) {
  throw Error(ErrorCode::TypeError, where + ": " + what);
}

inline double to_number(const std::string &v, const std::string &where) {
  double x = 0.0;
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  if (!io_detail::parse_double(v, x)) type_error(where, "expected a number, got '" + v + "'");
  return x;
}

inline std::size_t to_count(const std::string &v, const std::string &where) {
  std::size_t n = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), n);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    type_error(where, "expected a nonnegative integer, got '" + v + "'");
  return n;
}

inline bool to_bool(const std::string &v, const std::string &where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  type_error(where, "expected true or false, got '" + v + "'");
}

inline Vec3 to_vec3(const std::string &v, const std::string &where) {
  const auto tok = io_detail::split_ws(v);
  if (tok.size() != 3) type_error(where, "expected three numbers, got '" + v + "'");
  return Vec3(to_number(tok[0], where), to_number(tok[1], where), to_number(tok[2], where));
}

inline std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return io_detail::format_double(x);
}
inline std::string vec(const Vec3 &v) { return num(v.x()) + ' ' + num(v.y()) + ' ' + num(v.z()); }
inline std::string boolean(bool b) { return b ? "true" : "false"; }

template <class Enum>
Enum to_enum(const std::string &v, const std::string &where, std::initializer_list<std::pair<const char *, Enum>> opts) {
  std::string names;
  for (const auto &[name, value] : opts) {
    if (v == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  type_error(where, "expected one of {" + names + "}, got '" + v + "'");
}

template <class Enum>
std::string from_enum(Enum e, std::initializer_list<std::pair<const char *, Enum>> opts) {
  for (const auto &[name, value] : opts)
    if (value == e) return name;
  return "?";
}

inline const std::initializer_list<std::pair<const char *, MeshKind>> kMeshKinds{
    {"icosphere", MeshKind::Icosphere}, {"spheroid", MeshKind::Spheroid}, {"tube", MeshKind::Tube},
    {"patch", MeshKind::HexPatch},      {"bump", MeshKind::Bump},         {"file", MeshKind::File}};
inline const std::initializer_list<std::pair<const char *, PressureLaw>> kPressureLaws{
    {"none", PressureLaw::None}, {"van_hoff", PressureLaw::VanHoff}, {"phenomenological", PressureLaw::Phenomenological}};
inline const std::initializer_list<std::pair<const char *, BoundaryKind>> kBoundaryKinds{
    {"free", BoundaryKind::Free}, {"roller", BoundaryKind::Roller}, {"pinned", BoundaryKind::Pinned}, {"fixed", BoundaryKind::Fixed}};
inline const std::initializer_list<std::pair<const char *, ProteinProfile>> kProfiles{
    {"uniform", ProteinProfile::Uniform}, {"geodesic_disk", ProteinProfile::GeodesicDisk}};
inline const std::initializer_list<std::pair<const char *, RunMode>> kModes{
    {"dynamics", RunMode::Dynamics}, {"minimize", RunMode::Minimize}, {"coupled", RunMode::Coupled}};

enum class Sign { Any, Nonnegative, Positive };

inline void check_sign(double x, Sign s, const std::string &where, const std::string &key) {
  if (std::isnan(x)) type_error(where, key + " must be a number");
  if (s == Sign::Positive && !(x > 0.0)) type_error(where, key + " must be positive");
  if (s == Sign::Nonnegative && !(x >= 0.0)) type_error(where, key + " must be nonnegative");
}

inline const std::vector<Field> &fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    auto real = [&t](std::string sec, std::string key, auto member, Sign sign = Sign::Any) {
      t.push_back({sec, key,
                   [member, sign, key](RunConfig &c, const std::string &v, const std::string &w) {
                     const double x = to_number(v, w);
                     check_sign(x, sign, w, key);
                     member(c) = x;
                   },
                   [member](const RunConfig &c) { return num(member(const_cast<RunConfig &>(c))); }});
    };
    auto count = [&t](std::string sec, std::string key, auto member) {
      t.push_back({sec, key, [member](RunConfig &c, const std::string &v, const std::string &w) { member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_count(v, w)); },
                   [member](const RunConfig &c) { return std::to_string(member(const_cast<RunConfig &>(c))); }});
    };
    auto flag = [&t](std::string sec, std::string key, auto member) {
      t.push_back({sec, key, [member](RunConfig &c, const std::string &v, const std::string &w) { member(c) = to_bool(v, w); },
                   [member](const RunConfig &c) { return boolean(member(const_cast<RunConfig &>(c))); }});
    };
#define MEMDDG_M(expr) [](RunConfig &c) -> auto & { return c.expr; }
    t.push_back({"", "mode", [](RunConfig &c, const std::string &v, const std::string &w) { c.mode = to_enum(v, w, kModes); },
                 [](const RunConfig &c) { return from_enum(c.mode, kModes); }});
    count("", "seed", MEMDDG_M(seed));

    t.push_back({"mesh", "kind", [](RunConfig &c, const std::string &v, const std::string &w) { c.mesh.kind = to_enum(v, w, kMeshKinds); },
                 [](const RunConfig &c) { return from_enum(c.mesh.kind, kMeshKinds); }});
    t.push_back({"mesh", "subdivisions",
                 [](RunConfig &c, const std::string &v, const std::string &w) { c.mesh.subdivisions = static_cast<int>(to_count(v, w)); },
                 [](const RunConfig &c) { return std::to_string(c.mesh.subdivisions); }});
    real("mesh", "radius", MEMDDG_M(mesh.radius), Sign::Positive);
    real("mesh", "axis_a", MEMDDG_M(mesh.axis_a), Sign::Positive);
    real("mesh", "axis_c", MEMDDG_M(mesh.axis_c), Sign::Positive);
    real("mesh", "length", MEMDDG_M(mesh.length), Sign::Positive);
    count("mesh", "n_around", MEMDDG_M(mesh.n_around));
    count("mesh", "n_rings", MEMDDG_M(mesh.n_rings));
    count("mesh", "rings", MEMDDG_M(mesh.rings));
    real("mesh", "bump_height", MEMDDG_M(mesh.bump_height));
    real("mesh", "bump_width", MEMDDG_M(mesh.bump_width), Sign::Positive);
    real("mesh", "target_area", MEMDDG_M(mesh.target_area), Sign::Nonnegative);
    t.push_back({"mesh", "path", [](RunConfig &c, const std::string &v, const std::string &) { c.mesh.path = v; },
                 [](const RunConfig &c) { return '"' + c.mesh.path + '"'; }});

    real("membrane", "kappa_b", MEMDDG_M(params.kappa_b), Sign::Positive);
    real("membrane", "kappa_c", MEMDDG_M(params.kappa_c));
    real("membrane", "curvature_c", MEMDDG_M(params.curvature_c));
    real("membrane", "K_A", MEMDDG_M(params.K_A), Sign::Nonnegative);
    real("membrane", "preferred_area", MEMDDG_M(params.preferred_area), Sign::Nonnegative);
    t.push_back({"membrane", "fixed_tension",
                 [](RunConfig &c, const std::string &v, const std::string &w) {
                   if (v == "none") c.params.fixed_tension.reset();
                   else c.params.fixed_tension = to_number(v, w);
                 },
                 [](const RunConfig &c) { return c.params.fixed_tension ? num(*c.params.fixed_tension) : std::string("none"); }});
    t.push_back({"membrane", "pressure_law",
                 [](RunConfig &c, const std::string &v, const std::string &w) { c.params.pressure_law = to_enum(v, w, kPressureLaws); },
                 [](const RunConfig &c) { return from_enum(c.params.pressure_law, kPressureLaws); }});
    real("membrane", "K_V", MEMDDG_M(params.K_V), Sign::Nonnegative);
    real("membrane", "concentration_ratio", MEMDDG_M(params.concentration_ratio), Sign::Nonnegative);
    real("membrane", "preferred_volume", MEMDDG_M(params.preferred_volume), Sign::Nonnegative);
    real("membrane", "epsilon", MEMDDG_M(params.epsilon));
    real("membrane", "eta", MEMDDG_M(params.eta), Sign::Nonnegative);
    real("membrane", "xi", MEMDDG_M(params.xi), Sign::Positive);
    real("membrane", "mobility", MEMDDG_M(params.mobility), Sign::Nonnegative);

    flag("reservoir", "enabled", MEMDDG_M(reservoir.enabled));
    real("reservoir", "area", MEMDDG_M(reservoir.area), Sign::Nonnegative);
    real("reservoir", "volume", MEMDDG_M(reservoir.volume), Sign::Nonnegative);

    t.push_back({"boundary", "shape",
                 [](RunConfig &c, const std::string &v, const std::string &w) { c.bcs.shape.kind = to_enum(v, w, kBoundaryKinds); },
                 [](const RunConfig &c) { return from_enum(c.bcs.shape.kind, kBoundaryKinds); }});
    t.push_back({"boundary", "axis", [](RunConfig &c, const std::string &v, const std::string &w) { c.bcs.shape.axis = to_vec3(v, w); },
                 [](const RunConfig &c) { return vec(c.bcs.shape.axis); }});
    t.push_back({"boundary", "protein_dirichlet",
                 [](RunConfig &c, const std::string &v, const std::string &w) {
                   if (v == "none") c.bcs.protein_dirichlet.reset();
                   else c.bcs.protein_dirichlet = to_number(v, w);
                 },
                 [](const RunConfig &c) { return c.bcs.protein_dirichlet ? num(*c.bcs.protein_dirichlet) : std::string("none"); }});

    t.push_back({"protein", "profile",
                 [](RunConfig &c, const std::string &v, const std::string &w) { c.protein.profile = to_enum(v, w, kProfiles); },
                 [](const RunConfig &c) { return from_enum(c.protein.profile, kProfiles); }});
    real("protein", "value", MEMDDG_M(protein.value), Sign::Nonnegative);
    real("protein", "disk_radius", MEMDDG_M(protein.disk_radius), Sign::Positive);
    real("protein", "sharpness", MEMDDG_M(protein.sharpness), Sign::Positive);
    t.push_back({"protein", "center", [](RunConfig &c, const std::string &v, const std::string &w) { c.protein.center = to_vec3(v, w); },
                 [](const RunConfig &c) { return vec(c.protein.center); }});
    flag("protein", "recompute", MEMDDG_M(protein.recompute));

    real("regularization", "K_e", MEMDDG_M(regularization.K_e), Sign::Nonnegative);
    real("regularization", "K_f", MEMDDG_M(regularization.K_f), Sign::Nonnegative);
    real("regularization", "K_c", MEMDDG_M(regularization.K_c), Sign::Nonnegative);

    real("solver", "dt_init", MEMDDG_M(solver.dt_init), Sign::Positive);
    real("solver", "dt_max", MEMDDG_M(solver.dt_max), Sign::Nonnegative);
    real("solver", "tolerance", MEMDDG_M(solver.tolerance), Sign::Positive);
    count("solver", "max_steps", MEMDDG_M(solver.max_steps));
    real("solver", "sufficient_decrease", MEMDDG_M(solver.sufficient_decrease), Sign::Positive);
    real("solver", "shrink", MEMDDG_M(solver.shrink), Sign::Positive);
    count("solver", "max_backtracks", MEMDDG_M(solver.max_backtracks));
    real("solver", "growth", MEMDDG_M(solver.growth), Sign::Positive);
    count("solver", "cg_restart_period", MEMDDG_M(solver.cg_restart_period));
    real("solver", "barrier_strength", MEMDDG_M(solver.barrier_strength), Sign::Nonnegative);
    count("solver", "remesh_period", MEMDDG_M(solver.remesh_period));
    count("solver", "output_period", MEMDDG_M(solver.output_period));
    flag("solver", "freeze_shape", MEMDDG_M(solver.freeze_shape));

    flag("remesh", "flip", MEMDDG_M(remesh.flip));
    flag("remesh", "collapse", MEMDDG_M(remesh.collapse));
    flag("remesh", "split", MEMDDG_M(remesh.split));
    flag("remesh", "shift", MEMDDG_M(remesh.shift));
    real("remesh", "collapse_aspect_ratio", MEMDDG_M(remesh.collapse_aspect_ratio), Sign::Positive);
    real("remesh", "split_curvature", MEMDDG_M(remesh.split_curvature), Sign::Positive);
    real("remesh", "max_edge_length", MEMDDG_M(remesh.max_edge_length), Sign::Nonnegative);
    count("remesh", "max_flip_sweeps", MEMDDG_M(remesh.max_flip_sweeps));
#undef MEMDDG_M
    return t;
  }();
  return table;
}

/// Message of an Error without its leading code.
inline std::string bare_message(const Error &e) {
  const std::string m = e.what();
  const auto p = m.find(": ");
  return p == std::string::npos ? m : m.substr(p + 2);
}

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

/// Strips a trailing comment outside quotes.
inline std::string strip_comment(const std::string &line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quote) {
      if (ch == quote) quote = 0;
    } else if (ch == '"' || ch == '\'') {
      quote = ch;
    } else if (ch == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

} // namespace config_detail

/// Parses configuration text. Without a preset, `mode` and `[mesh] kind` are
/// required.
inline RunConfig parse_config(const std::string &text, const std::string &source = "<config>") {
  using namespace config_detail;
  struct Entry {
    std::string section, key, value;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t lineno = 0;
  std::optional<Entry> preset;
  auto where = [&](std::size_t l) { return source + ":" + std::to_string(l); };
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ParseError, where(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known{"mesh", "membrane", "reservoir", "boundary", "protein",
                                               "regularization", "solver", "remesh"};
      if (!known.contains(section)) throw Error(ErrorCode::UnknownKey, where(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, where(lineno) + ": expected 'key = value'");
    Entry e{section, trim(line.substr(0, eq)), unquote(trim(line.substr(eq + 1))), lineno};
    if (e.key.empty()) throw Error(ErrorCode::ParseError, where(lineno) + ": empty key");
    if (e.section.empty() && e.key == "preset") {
      preset = e;
      continue;
    }
    const bool known = std::any_of(fields().begin(), fields().end(),
                                   [&](const Field &f) { return f.section == e.section && f.key == e.key; });
    if (!known) {
      const std::string name = e.section.empty() ? e.key : e.section + "." + e.key;
      throw Error(ErrorCode::UnknownKey, where(lineno) + ": unknown key '" + name + "'");
    }
    entries.push_back(std::move(e));
  }

  RunConfig cfg;
  if (preset) {
    try {
      cfg = make_preset(preset->value);
    } catch (const Error &err) {
      throw Error(err.code(), where(preset->line) + ": " + bare_message(err));
    }
  } else {
    auto has = [&](const std::string &sec, const std::string &key) {
      return std::any_of(entries.begin(), entries.end(), [&](const Entry &e) { return e.section == sec && e.key == key; });
    };
    if (!has("", "mode")) throw Error(ErrorCode::MissingRequired, where(lineno) + ": 'mode' is required without a preset");
    if (!has("mesh", "kind")) throw Error(ErrorCode::MissingRequired, where(lineno) + ": '[mesh] kind' is required without a preset");
  }
  for (const Entry &e : entries) {
    for (const Field &f : fields())
      if (f.section == e.section && f.key == e.key) f.set(cfg, e.value, where(e.line));
  }
  if (!preset) cfg.preset.clear();
  if (cfg.mesh.kind == MeshKind::File && cfg.mesh.path.empty())
    throw Error(ErrorCode::MissingRequired, where(lineno) + ": '[mesh] path' is required for kind = file");
  try {
    cfg.validate();
  } catch (const Error &err) {
    throw Error(ErrorCode::TypeError, source + ": " + bare_message(err));
  }
  return cfg;
}

inline RunConfig read_config(const std::string &path) { return parse_config(io_detail::read_text(path), path); }

/// Complete text form; parse_config(serialize_config(c)) reproduces c exactly.
inline std::string serialize_config(const RunConfig &cfg) {
  using namespace config_detail;
  std::string out;
  if (!cfg.preset.empty()) out += "preset = \"" + cfg.preset + "\"\n";
  std::string section = "";
  for (const Field &f : fields()) {
    if (f.section != section) {
      section = f.section;
      out += "\n[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + '\n';
  }
  return out;
}

inline bool operator==(const MeshSpec &a, const MeshSpec &b) {
  return a.kind == b.kind && a.subdivisions == b.subdivisions && a.radius == b.radius && a.axis_a == b.axis_a &&
         a.axis_c == b.axis_c && a.length == b.length && a.n_around == b.n_around && a.n_rings == b.n_rings &&
         a.rings == b.rings && a.bump_height == b.bump_height && a.bump_width == b.bump_width &&
         a.target_area == b.target_area && a.path == b.path;
}

/// Field-by-field equality through the serialized form.
inline bool same_config(const RunConfig &a, const RunConfig &b) {
  return a.preset == b.preset && serialize_config(a) == serialize_config(b);
}

// ---------------------------------------------------------------------------
// Text sinks with optional gzip.

class TextSink {
public:
  TextSink(const std::string &path, bool gzip) : gzip_(gzip), path_(path) {
    if (gzip_) {
      gz_ = gzopen(path.c_str(), "wb");
      if (!gz_) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    }
  }
  TextSink(const TextSink &) = delete;
  TextSink &operator=(const TextSink &) = delete;
  ~TextSink() { close(); }

  void write(const std::string &s) {
    if (gzip_) {
      if (s.empty()) return;
      if (gzwrite(gz_, s.data(), static_cast<unsigned>(s.size())) != static_cast<int>(s.size()))
        throw Error(ErrorCode::IoError, "gzip write failed for '" + path_ + "'");
    } else {
      file_ << s;
      if (!file_) throw Error(ErrorCode::IoError, "write failed for '" + path_ + "'");
    }
  }
  void close() {
    if (gz_) {
      gzclose(gz_);
      gz_ = nullptr;
    }
    if (file_.is_open()) file_.close();
  }

private:
  bool gzip_;
  std::string path_;
  gzFile gz_ = nullptr;
  std::ofstream file_;
};

/// Reads a file, inflating it when it starts with the gzip magic.
inline std::string read_maybe_gzip(const std::string &path) {
  gzFile gz = gzopen(path.c_str(), "rb"); // transparently reads plain files too
  if (!gz) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(gz, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(gz);
  if (failed) throw Error(ErrorCode::IoError, "read failed for '" + path + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories.
//
//   memddg-trajectory 1
//   units length=um force=nN time=s energy=um*nN
//   mutation_log <path|none>
//   config <n lines>            followed by the serialized configuration
//   frame <k> t=<t> nv=<nv> nf=<nf>
//   topology                    followed by nf "a b c" lines, or
//   topology_ref <j>            reusing the faces of frame j
//   vertices                    followed by nv "x y z phi" lines
//   summary key=value ...
//   end_frame

struct TrajectoryFrame {
  std::size_t index = 0;
  double time = 0.0;
  std::vector<Triangle> triangles;
  VertexPositions positions;
  Eigen::VectorXd phi;
  std::map<std::string, double> summary;
  std::optional<std::size_t> topology_ref; // frame whose faces were reused
};

struct Trajectory {
  int version = 1;
  std::string units;
  std::string mutation_log;
  std::string config_text;
  std::vector<TrajectoryFrame> frames;
};

inline std::map<std::string, double> summary_of(const StepRecord &r) {
  return {{"step", double(r.step)},
          {"E_total", r.energy.total},
          {"E_bending", r.energy.bending},
          {"E_stretching", r.energy.stretching},
          {"E_pressure", r.energy.pressure},
          {"E_dirichlet", r.energy.dirichlet},
          {"E_adsorption", r.energy.adsorption},
          {"E_regularization", r.energy.regularization},
          {"E_external", r.energy.external},
          {"residual_mechanical", r.residual_mechanical},
          {"residual_chemical", r.residual_chemical},
          {"area", r.area},
          {"volume", r.volume},
          {"phi_min", r.phi_min},
          {"phi_max", r.phi_max}};
}

class TrajectoryWriter {
public:
  TrajectoryWriter(const std::string &path, const std::string &config_text, bool gzip = false,
                   const std::string &mutation_log = "none")
      : sink_(path, gzip) {
    std::size_t n = 0;
    for (char ch : config_text) n += ch == '\n';
    if (!config_text.empty() && config_text.back() != '\n') ++n;
    std::string head = "memddg-trajectory 1\nunits length=um force=nN time=s energy=um*nN\nmutation_log " +
                       mutation_log + "\nconfig " + std::to_string(n) + '\n' + config_text;
    if (!config_text.empty() && config_text.back() != '\n') head += '\n';
    sink_.write(head);
  }

  void write_frame(const System &s, const std::map<std::string, double> &summary = {}) {
    using io_detail::format_double;
    const auto tris = s.mesh.triangles();
    std::string out = "frame " + std::to_string(frames_) + " t=" + format_double(s.time) +
                      " nv=" + std::to_string(s.positions.rows()) + " nf=" + std::to_string(tris.size()) + '\n';
    if (frames_ > 0 && tris == last_triangles_) {
      out += "topology_ref " + std::to_string(last_topology_frame_) + '\n';
    } else {
      out += "topology\n";
      for (const auto &t : tris)
        out += std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
      last_triangles_ = tris;
      last_topology_frame_ = frames_;
    }
    out += "vertices\n";
    for (Eigen::Index i = 0; i < s.positions.rows(); ++i) {
      out += format_double(s.positions(i, 0)) + ' ' + format_double(s.positions(i, 1)) + ' ' +
             format_double(s.positions(i, 2)) + ' ' + format_double(i < s.phi.size() ? s.phi[i] : 0.0) + '\n';
    }
    out += "summary";
    for (const auto &[k, v] : summary) out += ' ' + k + '=' + format_double(v);
    out += "\nend_frame\n";
    sink_.write(out);
    ++frames_;
  }

  std::size_t frames() const { return frames_; }
  void close() { sink_.close(); }

private:
  TextSink sink_;
  std::size_t frames_ = 0;
  std::vector<Triangle> last_triangles_;
  std::size_t last_topology_frame_ = 0;
};

inline Trajectory parse_trajectory(const std::string &text, const std::string &where = "<trajectory>") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char *what) {
    if (!std::getline(in, line)) io_detail::parse_error(where, lineno, std::string("unexpected end of file, expected ") + what);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  auto number = [&](const std::string &tok) {
    double x = 0.0;
    if (!io_detail::parse_double(tok, x)) io_detail::parse_error(where, lineno, "bad number '" + tok + "'");
    return x;
  };
  auto count = [&](const std::string &tok) {
    std::size_t n = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), n);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) io_detail::parse_error(where, lineno, "bad count '" + tok + "'");
    return n;
  };
  auto value_after = [&](const std::string &tok, const std::string &key) {
    if (tok.rfind(key + "=", 0) != 0) io_detail::parse_error(where, lineno, "expected " + key + "=");
    return tok.substr(key.size() + 1);
  };

  Trajectory tr;
  next("header");
  if (line != "memddg-trajectory 1") io_detail::parse_error(where, lineno, "not a trajectory file");
  next("units");
  if (line.rfind("units ", 0) != 0) io_detail::parse_error(where, lineno, "expected units line");
  tr.units = line.substr(6);
  next("mutation_log");
  if (line.rfind("mutation_log ", 0) != 0) io_detail::parse_error(where, lineno, "expected mutation_log line");
  tr.mutation_log = line.substr(13);
  next("config");
  if (line.rfind("config ", 0) != 0) io_detail::parse_error(where, lineno, "expected config line");
  const std::size_t n_config = count(line.substr(7));
  for (std::size_t i = 0; i < n_config; ++i) {
    next("config text");
    tr.config_text += line + '\n';
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tok = io_detail::split_ws(line);
    if (tok.size() != 5 || tok[0] != "frame") io_detail::parse_error(where, lineno, "expected frame header");
    TrajectoryFrame f;
    f.index = count(tok[1]);
    if (f.index != tr.frames.size()) io_detail::parse_error(where, lineno, "frame index out of order");
    f.time = number(value_after(tok[2], "t"));
    const std::size_t nv = count(value_after(tok[3], "nv"));
    const std::size_t nf = count(value_after(tok[4], "nf"));
    if (!tr.frames.empty() && f.time < tr.frames.back().time)
      io_detail::parse_error(where, lineno, "frame times must be nondecreasing");
    next("topology");
    tok = io_detail::split_ws(line);
    if (tok.size() == 2 && tok[0] == "topology_ref") {
      const std::size_t ref = count(tok[1]);
      if (ref >= tr.frames.size()) io_detail::parse_error(where, lineno, "topology_ref to a later frame");
      f.topology_ref = ref;
      f.triangles = tr.frames[ref].triangles;
      if (f.triangles.size() != nf) io_detail::parse_error(where, lineno, "referenced topology has a different face count");
    } else if (tok.size() == 1 && tok[0] == "topology") {
      f.triangles.reserve(nf);
      for (std::size_t k = 0; k < nf; ++k) {
        next("face");
        const auto ft = io_detail::split_ws(line);
        if (ft.size() != 3) io_detail::parse_error(where, lineno, "faces must be triangles");
        Triangle t{count(ft[0]), count(ft[1]), count(ft[2])};
        for (auto v : t)
          if (v >= nv) io_detail::parse_error(where, lineno, "face index out of range");
        f.triangles.push_back(t);
      }
    } else {
      io_detail::parse_error(where, lineno, "expected topology or topology_ref");
    }
    next("vertices");
    if (line != "vertices") io_detail::parse_error(where, lineno, "expected vertices");
    f.positions.resize(static_cast<Eigen::Index>(nv), 3);
    f.phi.resize(static_cast<Eigen::Index>(nv));
    for (std::size_t i = 0; i < nv; ++i) {
      next("vertex");
      const auto vt = io_detail::split_ws(line);
      if (vt.size() != 4) io_detail::parse_error(where, lineno, "vertex lines need x y z phi");
      for (int c = 0; c < 3; ++c) f.positions(Eigen::Index(i), c) = number(vt[std::size_t(c)]);
      f.phi[Eigen::Index(i)] = number(vt[3]);
    }
    next("summary");
    tok = io_detail::split_ws(line);
    if (tok.empty() || tok[0] != "summary") io_detail::parse_error(where, lineno, "expected summary");
    for (std::size_t k = 1; k < tok.size(); ++k) {
      const auto eq = tok[k].find('=');
      if (eq == std::string::npos) io_detail::parse_error(where, lineno, "summary entries are key=value");
      f.summary[tok[k].substr(0, eq)] = number(tok[k].substr(eq + 1));
    }
    next("end_frame");
    if (line != "end_frame") io_detail::parse_error(where, lineno, "expected end_frame");
    tr.frames.push_back(std::move(f));
  }
  return tr;
}

inline Trajectory read_trajectory(const std::string &path) { return parse_trajectory(read_maybe_gzip(path), path); }

/// Mesh and fields of one frame; needs nothing outside the file.
inline MeshData frame_mesh(const TrajectoryFrame &f) {
  std::vector<Vec3> p(static_cast<std::size_t>(f.positions.rows()));
  for (Eigen::Index i = 0; i < f.positions.rows(); ++i) p[std::size_t(i)] = f.positions.row(i).transpose();
  return make_mesh(p, f.triangles);
}

// ---------------------------------------------------------------------------
// Scalar CSV.

inline const std::vector<std::string> &csv_columns() {
  static const std::vector<std::string> cols{
      "step", "time", "E_total", "E_bending", "E_stretching", "E_pressure", "E_dirichlet", "E_adsorption",
      "E_regularization", "E_external", "residual_mechanical", "residual_chemical", "area", "volume", "phi_min",
      "phi_max", "shape_step", "shape_backtracks", "protein_step", "protein_backtracks"};
  return cols;
}

inline std::string csv_header() {
  std::string out;
  for (const auto &c : csv_columns()) out += (out.empty() ? "" : ",") + c;
  return out + '\n';
}

inline std::string csv_row(const StepRecord &r) {
  using io_detail::format_double;
  const std::vector<std::string> v{
      std::to_string(r.step), format_double(r.time), format_double(r.energy.total),
      format_double(r.energy.bending), format_double(r.energy.stretching), format_double(r.energy.pressure),
      format_double(r.energy.dirichlet), format_double(r.energy.adsorption), format_double(r.energy.regularization),
      format_double(r.energy.external), format_double(r.residual_mechanical), format_double(r.residual_chemical),
      format_double(r.area), format_double(r.volume), format_double(r.phi_min), format_double(r.phi_max),
      format_double(r.shape.step), std::to_string(r.shape.backtracks), format_double(r.protein.step),
      std::to_string(r.protein.backtracks)};
  std::string out;
  for (const auto &x : v) out += (out.empty() ? "" : ",") + x;
  return out + '\n';
}

/// Cell quoted when it holds a comma, quote or line break.
inline std::string csv_cell(const std::string &cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + '"';
}

/// Generic table with a header row.
inline std::string csv_table(const std::vector<std::string> &header, const std::vector<std::vector<std::string>> &rows) {
  auto join = [](const std::vector<std::string> &cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_cell(cells[i]);
    return out + '\n';
  };
  std::string out = join(header);
  for (const auto &r : rows) out += join(r);
  return out;
}

// ---------------------------------------------------------------------------
// Mutation logs.

inline std::string serialize_mutation_log(const MutationLog &log) {
  using io_detail::format_double;
  std::string out = "memddg-mutations 1\napplied " + std::to_string(log.applied.size()) + '\n';
  for (const Mutation &m : log.applied)
    out += to_string(m.kind) + ' ' + std::to_string(m.element) + ' ' + format_double(m.position.x()) + ' ' +
           format_double(m.position.y()) + ' ' + format_double(m.position.z()) + ' ' + format_double(m.phi) + '\n';
  out += "skipped " + std::to_string(log.skipped.size()) + '\n';
  for (const SkippedMutation &m : log.skipped) out += to_string(m.kind) + ' ' + std::to_string(m.element) + ' ' + m.reason + '\n';
  return out;
}

inline MutationLog parse_mutation_log(const std::string &text, const std::string &where = "<mutations>") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char *what) {
    if (!std::getline(in, line)) io_detail::parse_error(where, lineno, std::string("unexpected end of file, expected ") + what);
    ++lineno;
  };
  auto kind_of = [&](const std::string &s) {
    for (MutationKind k : {MutationKind::Flip, MutationKind::Split, MutationKind::Collapse, MutationKind::Move})
      if (to_string(k) == s) return k;
    io_detail::parse_error(where, lineno, "unknown mutation '" + s + "'");
  };
  auto count = [&](const std::string &tok) {
    std::size_t n = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), n);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) io_detail::parse_error(where, lineno, "bad count '" + tok + "'");
    return n;
  };
  MutationLog log;
  next("header");
  if (line != "memddg-mutations 1") io_detail::parse_error(where, lineno, "not a mutation log");
  next("applied");
  auto tok = io_detail::split_ws(line);
  if (tok.size() != 2 || tok[0] != "applied") io_detail::parse_error(where, lineno, "expected 'applied <n>'");
  const std::size_t n_applied = count(tok[1]);
  for (std::size_t i = 0; i < n_applied; ++i) {
    next("mutation");
    tok = io_detail::split_ws(line);
    if (tok.size() != 6) io_detail::parse_error(where, lineno, "mutation lines need kind element x y z phi");
    Mutation m;
    m.kind = kind_of(tok[0]);
    m.element = count(tok[1]);
    for (int c = 0; c < 3; ++c)
      if (!io_detail::parse_double(tok[std::size_t(2 + c)], m.position[c])) io_detail::parse_error(where, lineno, "bad number");
    if (!io_detail::parse_double(tok[5], m.phi)) io_detail::parse_error(where, lineno, "bad number");
    log.applied.push_back(m);
  }
  next("skipped");
  tok = io_detail::split_ws(line);
  if (tok.size() != 2 || tok[0] != "skipped") io_detail::parse_error(where, lineno, "expected 'skipped <n>'");
  const std::size_t n_skipped = count(tok[1]);
  for (std::size_t i = 0; i < n_skipped; ++i) {
    next("skipped mutation");
    std::istringstream ls(line);
    std::string kind, element;
    ls >> kind >> element;
    std::string reason;
    std::getline(ls, reason);
    log.skipped.push_back({kind_of(kind), count(element), config_detail::trim(reason)});
  }
  return log;
}

} // namespace memddg

#pragma once

#include "memddg/generators.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace memddg {

enum class MeshFormat { Ply, Obj };

namespace io_detail {

[[noreturn]] inline void parse_error(const std::string &where, std::size_t line, const std::string &what) {
  throw Error(ErrorCode::ParseError, where + ":" + std::to_string(line) + ": " + what);
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double &out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string> split_ws(const std::string &line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline MeshFormat format_from_path(const std::string &path) {
  auto ends = [&](std::string_view ext) {
    if (path.size() < ext.size()) return false;
    for (std::size_t i = 0; i < ext.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(path[path.size() - ext.size() + i])) != ext[i]) return false;
    return true;
  };
  if (ends(".ply")) return MeshFormat::Ply;
  if (ends(".obj")) return MeshFormat::Obj;
  throw Error(ErrorCode::IoError, "unknown mesh extension for '" + path + "'");
}

} // namespace io_detail

// ---------------------------------------------------------------------------
// Serialization to strings.

inline std::string mesh_to_ply(const HalfedgeMesh &mesh, const VertexPositions &r, const Eigen::VectorXd *phi = nullptr) {
  const auto tris = mesh.triangles();
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(r.rows()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n";
  if (phi) out += "property double phi\n";
  out += "element face " + std::to_string(tris.size()) + "\nproperty list uchar int vertex_indices\nend_header\n";
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    out += io_detail::format_double(r(i, 0)) + ' ' + io_detail::format_double(r(i, 1)) + ' ' +
           io_detail::format_double(r(i, 2));
    if (phi) out += ' ' + io_detail::format_double((*phi)[i]);
    out += '\n';
  }
  for (const auto &t : tris)
    out += "3 " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
  return out;
}

inline std::string mesh_to_obj(const HalfedgeMesh &mesh, const VertexPositions &r) {
  std::string out;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    out += "v " + io_detail::format_double(r(i, 0)) + ' ' + io_detail::format_double(r(i, 1)) + ' ' +
           io_detail::format_double(r(i, 2)) + '\n';
  for (const auto &t : mesh.triangles())
    out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' + std::to_string(t[2] + 1) + '\n';
  return out;
}

/// ASCII PLY with x, y, z and an optional "phi" vertex property; other
/// double/float vertex properties are skipped.
inline MeshData mesh_from_ply(const std::string &text, Eigen::VectorXd *phi = nullptr,
                              const std::string &where = "<ply>") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next() || line != "ply") io_detail::parse_error(where, lineno, "missing 'ply' magic");
  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<std::string> vprops;
  std::string element;
  bool ascii = false;
  for (;;) {
    if (!next()) io_detail::parse_error(where, lineno, "missing end_header");
    const auto tok = io_detail::split_ws(line);
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") io_detail::parse_error(where, lineno, "only ascii PLY is supported");
      ascii = true;
    } else if (tok[0] == "element" && tok.size() == 3) {
      element = tok[1];
      std::size_t n = 0;
      const auto res = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), n);
      if (res.ec != std::errc()) io_detail::parse_error(where, lineno, "bad element count");
      if (element == "vertex") n_vertices = n;
      else if (element == "face") n_faces = n;
      else if (n != 0) io_detail::parse_error(where, lineno, "unsupported element '" + element + "'");
    } else if (tok[0] == "property") {
      if (element == "vertex") {
        if (tok.size() != 3 || tok[1] == "list") io_detail::parse_error(where, lineno, "bad vertex property");
        vprops.push_back(tok[2]);
      }
    } else {
      io_detail::parse_error(where, lineno, "unexpected header line '" + line + "'");
    }
  }
  if (!ascii) io_detail::parse_error(where, lineno, "missing format line");
  auto index_of = [&](const std::string &name) -> long {
    for (std::size_t i = 0; i < vprops.size(); ++i)
      if (vprops[i] == name) return static_cast<long>(i);
    return -1;
  };
  const long ix = index_of("x"), iy = index_of("y"), iz = index_of("z"), ip = index_of("phi");
  if (ix < 0 || iy < 0 || iz < 0) io_detail::parse_error(where, lineno, "vertex needs x, y, z");

  std::vector<Vec3> points(n_vertices);
  Eigen::VectorXd phi_values(ip >= 0 ? static_cast<Eigen::Index>(n_vertices) : 0);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    if (!next()) io_detail::parse_error(where, lineno, "unexpected end of vertex list");
    const auto tok = io_detail::split_ws(line);
    if (tok.size() != vprops.size()) io_detail::parse_error(where, lineno, "wrong number of vertex values");
    std::vector<double> v(tok.size());
    for (std::size_t k = 0; k < tok.size(); ++k)
      if (!io_detail::parse_double(tok[k], v[k])) io_detail::parse_error(where, lineno, "bad number '" + tok[k] + "'");
    points[i] = Vec3(v[std::size_t(ix)], v[std::size_t(iy)], v[std::size_t(iz)]);
    if (ip >= 0) phi_values[Eigen::Index(i)] = v[std::size_t(ip)];
  }
  std::vector<Triangle> tris;
  for (std::size_t f = 0; f < n_faces; ++f) {
    if (!next()) io_detail::parse_error(where, lineno, "unexpected end of face list");
    const auto tok = io_detail::split_ws(line);
    if (tok.empty() || tok[0] != "3") io_detail::parse_error(where, lineno, "only triangle faces are supported");
    if (tok.size() != 4) io_detail::parse_error(where, lineno, "malformed face");
    Triangle t{};
    for (int k = 0; k < 3; ++k) {
      long idx = -1;
      const auto &s = tok[std::size_t(k + 1)];
      const auto res = std::from_chars(s.data(), s.data() + s.size(), idx);
      if (res.ec != std::errc() || idx < 0 || std::size_t(idx) >= n_vertices)
        io_detail::parse_error(where, lineno, "bad vertex index '" + s + "'");
      t[std::size_t(k)] = std::size_t(idx);
    }
    tris.push_back(t);
  }
  MeshData m = make_mesh(points, tris);
  if (phi) *phi = phi_values;
  return m;
}

/// OBJ with `v` and triangular `f` records; texture/normal indices are
/// ignored, negative indices count from the end.
inline MeshData mesh_from_obj(const std::string &text, const std::string &where = "<obj>") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<Vec3> points;
  std::vector<Triangle> tris;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = io_detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) io_detail::parse_error(where, lineno, "vertex needs three coordinates");
      Vec3 p;
      for (int k = 0; k < 3; ++k)
        if (!io_detail::parse_double(tok[std::size_t(k + 1)], p[k]))
          io_detail::parse_error(where, lineno, "bad number '" + tok[std::size_t(k + 1)] + "'");
      points.push_back(p);
    } else if (tok[0] == "f") {
      if (tok.size() != 4)
        io_detail::parse_error(where, lineno, "face with " + std::to_string(tok.size() - 1) + " vertices; only triangles are supported");
      Triangle t{};
      for (int k = 0; k < 3; ++k) {
        std::string s = tok[std::size_t(k + 1)];
        s = s.substr(0, s.find('/'));
        long idx = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), idx);
        if (res.ec != std::errc() || idx == 0) io_detail::parse_error(where, lineno, "bad vertex index '" + s + "'");
        const long resolved = idx > 0 ? idx - 1 : static_cast<long>(points.size()) + idx;
        if (resolved < 0 || std::size_t(resolved) >= points.size())
          io_detail::parse_error(where, lineno, "vertex index out of range");
        t[std::size_t(k)] = std::size_t(resolved);
      }
      tris.push_back(t);
    }
    // Other records (vn, vt, o, g, s, usemtl, ...) carry nothing we use.
  }
  return make_mesh(points, tris);
}

// ---------------------------------------------------------------------------
// Files.

inline MeshData read_mesh(const std::string &path, Eigen::VectorXd *phi = nullptr) {
  const std::string text = io_detail::read_text(path);
  if (io_detail::format_from_path(path) == MeshFormat::Ply) return mesh_from_ply(text, phi, path);
  if (phi) phi->resize(0);
  return mesh_from_obj(text, path);
}

inline void write_mesh(const std::string &path, const HalfedgeMesh &mesh, const VertexPositions &r,
                       const Eigen::VectorXd *phi = nullptr) {
  const MeshFormat f = io_detail::format_from_path(path);
  io_detail::write_text(path, f == MeshFormat::Ply ? mesh_to_ply(mesh, r, phi) : mesh_to_obj(mesh, r));
}

} // namespace memddg

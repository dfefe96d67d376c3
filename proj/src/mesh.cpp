// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/mesh.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "meshadv/error.hpp"

namespace meshadv {

namespace {

bool is_blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// Strips OBJ-style "idx/uv/normal" down to the leading index.
int parse_obj_index(const std::string& tok, long lineno, long n) {
  std::size_t slash = tok.find('/');
  const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
  long v = 0;
  try {
    v = std::stol(head);
  } catch (const std::exception&) {
    throw ParseError("bad face index '" + tok + "'", lineno);
  }
  if (v < 1 || v > n)
    throw IndexOutOfRange("face index " + std::to_string(v) + " out of range [1," +
                          std::to_string(n) + "] at line " + std::to_string(lineno));
  return static_cast<int>(v - 1);
}

Mesh load_off(std::istream& in) {
  std::string line;
  long lineno = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++lineno;
      if (!is_blank_or_comment(line)) {
        out = line;
        return true;
      }
    }
    return false;
  };

  std::string l;
  if (!next_line(l)) throw ParseError("empty OFF file", lineno);
  {
    std::istringstream ss(l);
    std::string magic;
    ss >> magic;
    if (magic != "OFF") throw ParseError("missing OFF header", lineno);
  }
  long n = 0, m = 0, e = 0;
  if (!next_line(l)) throw ParseError("missing counts line", lineno);
  {
    std::istringstream ss(l);
    if (!(ss >> n >> m >> e) || n < 0 || m < 0)
      throw ParseError("bad counts line '" + l + "'", lineno);
  }
  Mesh mesh;
  mesh.vertices.resize(n, 3);
  for (long i = 0; i < n; ++i) {
    if (!next_line(l)) throw ParseError("unexpected end of file in vertex list", lineno);
    std::istringstream ss(l);
    double x, y, z;
    if (!(ss >> x >> y >> z)) throw ParseError("bad vertex line '" + l + "'", lineno);
    mesh.vertices.row(i) << x, y, z;
  }
  std::vector<std::array<int, 3>> tris;
  tris.reserve(m);
  for (long f = 0; f < m; ++f) {
    if (!next_line(l)) throw ParseError("unexpected end of file in face list", lineno);
    std::istringstream ss(l);
    long cnt = 0;
    if (!(ss >> cnt)) throw ParseError("bad face line '" + l + "'", lineno);
    std::vector<int> idx(cnt);
    for (long t = 0; t < cnt; ++t) {
      long v;
      if (!(ss >> v)) throw ParseError("short face line '" + l + "'", lineno);
      if (v < 0 || v >= n)
        throw IndexOutOfRange("face index " + std::to_string(v) + " out of range at line " +
                              std::to_string(lineno));
      idx[t] = static_cast<int>(v);
    }
    if (cnt < 3) throw NonTriangleError("face with " + std::to_string(cnt) + " vertices");
    // Fan-triangulate polygons.
    for (long t = 1; t + 1 < cnt; ++t) tris.push_back({idx[0], idx[t], idx[t + 1]});
  }
  mesh.faces.resize(static_cast<long>(tris.size()), 3);
  for (long f = 0; f < mesh.faces.rows(); ++f)
    mesh.faces.row(f) << tris[f][0], tris[f][1], tris[f][2];
  return mesh;
}

Mesh load_obj(std::istream& in) {
  std::string line;
  long lineno = 0;
  std::vector<Eigen::RowVector3d> verts;
  std::vector<std::array<int, 3>> tris;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_or_comment(line)) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw ParseError("bad vertex line '" + line + "'", lineno);
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok)
        idx.push_back(parse_obj_index(tok, lineno, static_cast<long>(verts.size())));
      if (idx.size() < 3) throw NonTriangleError("face with fewer than 3 vertices");
      for (std::size_t t = 1; t + 1 < idx.size(); ++t)
        tris.push_back({idx[0], idx[t], idx[t + 1]});
    }
    // All other directives (vn, vt, usemtl, ...) are ignored.
  }
  Mesh mesh;
  mesh.vertices.resize(static_cast<long>(verts.size()), 3);
  for (long i = 0; i < mesh.vertices.rows(); ++i) mesh.vertices.row(i) = verts[i];
  mesh.faces.resize(static_cast<long>(tris.size()), 3);
  for (long f = 0; f < mesh.faces.rows(); ++f)
    mesh.faces.row(f) << tris[f][0], tris[f][1], tris[f][2];
  return mesh;
}

}  // namespace

void validate_mesh(const Mesh& mesh) {
  const long n = mesh.num_vertices();
  for (long f = 0; f < mesh.num_faces(); ++f) {
    const int i = mesh.faces(f, 0), j = mesh.faces(f, 1), k = mesh.faces(f, 2);
    if (i < 0 || i >= n || j < 0 || j >= n || k < 0 || k >= n)
      throw IndexOutOfRange("face " + std::to_string(f) + " references out-of-range vertex");
    if (i == j || j == k || i == k)
      throw NonTriangleError("face " + std::to_string(f) + " has repeated vertices");
  }
  if (!mesh.vertices.allFinite()) throw NonFiniteValue("mesh vertices contain NaN/Inf");
}

MeshFormat format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == "off") return MeshFormat::OFF;
  if (ext == "obj") return MeshFormat::OBJ;
  throw IoError("cannot infer mesh format from path: " + path);
}

Mesh load_mesh(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Mesh mesh = format == MeshFormat::OFF ? load_off(in) : load_obj(in);
  validate_mesh(mesh);
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path, MeshFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char buf[96];
  if (format == MeshFormat::OFF) {
    out << "OFF\n" << mesh.num_vertices() << " " << mesh.num_faces() << " 0\n";
    for (long i = 0; i < mesh.num_vertices(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", mesh.vertices(i, 0),
                    mesh.vertices(i, 1), mesh.vertices(i, 2));
      out << buf;
    }
    for (long f = 0; f < mesh.num_faces(); ++f)
      out << "3 " << mesh.faces(f, 0) << " " << mesh.faces(f, 1) << " " << mesh.faces(f, 2)
          << "\n";
  } else {
    for (long i = 0; i < mesh.num_vertices(); ++i) {
      std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", mesh.vertices(i, 0),
                    mesh.vertices(i, 1), mesh.vertices(i, 2));
      out << buf;
    }
    for (long f = 0; f < mesh.num_faces(); ++f)
      out << "f " << mesh.faces(f, 0) + 1 << " " << mesh.faces(f, 1) + 1 << " "
          << mesh.faces(f, 2) + 1 << "\n";
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

EdgeList build_edges(const Mesh& mesh) {
  validate_mesh(mesh);
  std::map<std::pair<int, int>, int> index;  // (a,b) -> slot in edges
  EdgeList list;
  auto angle_at = [&](int apex, int u, int v) {
    const Eigen::RowVector3d d1 = mesh.vertices.row(u) - mesh.vertices.row(apex);
    const Eigen::RowVector3d d2 = mesh.vertices.row(v) - mesh.vertices.row(apex);
    const double c = d1.dot(d2);
    const double s = d1.cross(d2).norm();
    return std::atan2(s, c);
  };
  for (long f = 0; f < mesh.num_faces(); ++f) {
    const int vi[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
    for (int e = 0; e < 3; ++e) {
      const int u = vi[e], v = vi[(e + 1) % 3], w = vi[(e + 2) % 3];
      const auto key = std::minmax(u, v);
      const double ang = angle_at(w, u, v);
      auto it = index.find(key);
      if (it == index.end()) {
        EdgeList::Edge edge;
        edge.a = key.first;
        edge.b = key.second;
        edge.face0 = static_cast<int>(f);
        edge.alpha = ang;
        index.emplace(key, static_cast<int>(list.edges.size()));
        list.edges.push_back(edge);
      } else {
        EdgeList::Edge& edge = list.edges[it->second];
        if (edge.face1 >= 0)
          throw NonManifoldError("edge (" + std::to_string(key.first) + "," +
                                 std::to_string(key.second) + ") belongs to more than two faces");
        edge.face1 = static_cast<int>(f);
        edge.beta = ang;
      }
    }
  }
  for (const auto& e : list.edges)
    if (e.boundary()) {
      list.has_boundary = true;
      break;
    }
  return list;
}

void require_closed(const EdgeList& edges) {
  if (edges.has_boundary)
    throw BoundaryError("mesh has boundary edges; attack pipeline requires a closed mesh");
}

Eigen::VectorXd triangle_areas(const Mesh& mesh) {
  validate_mesh(mesh);
  const Eigen::RowVector3d lo = mesh.vertices.colwise().minCoeff();
  const Eigen::RowVector3d hi = mesh.vertices.colwise().maxCoeff();
  const double diag2 = (hi - lo).squaredNorm();
  const double threshold = 1e-12 * diag2;
  Eigen::VectorXd areas(mesh.num_faces());
  for (long f = 0; f < mesh.num_faces(); ++f) {
    const Eigen::RowVector3d a = mesh.vertices.row(mesh.faces(f, 0));
    const Eigen::RowVector3d b = mesh.vertices.row(mesh.faces(f, 1));
    const Eigen::RowVector3d c = mesh.vertices.row(mesh.faces(f, 2));
    const double area = 0.5 * (b - a).cross(c - a).norm();
    if (area < threshold)
      throw DegenerateFaceError("face " + std::to_string(f) + " is degenerate (area " +
                                std::to_string(area) + ")");
    areas(f) = area;
  }
  return areas;
}

VertexAdjacency one_rings(const Mesh& mesh, const EdgeList& edges) {
  VertexAdjacency adj;
  adj.rings.assign(mesh.num_vertices(), {});
  for (const auto& e : edges.edges) {
    adj.rings[e.a].push_back(e.b);
    adj.rings[e.b].push_back(e.a);
  }
  for (auto& r : adj.rings) std::sort(r.begin(), r.end());
  return adj;
}

VertexAdjacency one_rings(const Mesh& mesh) { return one_rings(mesh, build_edges(mesh)); }

Mesh make_icosphere(int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::RowVector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::RowVector3d m = (verts[a] + verts[b]).normalized();
      verts.push_back(m);
      const int id = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  Mesh mesh;
  mesh.vertices.resize(static_cast<long>(verts.size()), 3);
  for (long i = 0; i < mesh.vertices.rows(); ++i) mesh.vertices.row(i) = verts[i];
  mesh.faces.resize(static_cast<long>(faces.size()), 3);
  for (long f = 0; f < mesh.faces.rows(); ++f)
    mesh.faces.row(f) << faces[f][0], faces[f][1], faces[f][2];
  return mesh;
}

}  // namespace meshadv

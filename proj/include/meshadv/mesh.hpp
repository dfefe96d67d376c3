// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace meshadv {

enum class MeshFormat { OFF, OBJ };

/// Triangle mesh: vertex positions (n x 3) and CCW face indices (m x 3).
/// Immutable by convention once built; everything downstream shares it
/// read-only.
struct Mesh {
  Eigen::MatrixXd vertices;  // n x 3
  Eigen::MatrixXi faces;     // m x 3

  long num_vertices() const { return vertices.rows(); }
  long num_faces() const { return faces.rows(); }
};

/// Unordered edges (i < j) with the angles opposite each edge and the faces
/// incident to it. Boundary edges carry one opposite angle / face.
struct EdgeList {
  struct Edge {
    int a = -1, b = -1;        // vertex indices, a < b
    int face0 = -1, face1 = -1;
    double alpha = 0.0;        // opposite angle in face0
    double beta = 0.0;         // opposite angle in face1 (valid iff face1 >= 0)
    bool boundary() const { return face1 < 0; }
  };
  std::vector<Edge> edges;
  bool has_boundary = false;

  long size() const { return static_cast<long>(edges.size()); }
};

/// Per-vertex sorted one-ring neighbor lists.
struct VertexAdjacency {
  std::vector<std::vector<int>> rings;
};

/// Validates the basic Mesh invariants (index range, non-degenerate faces).
void validate_mesh(const Mesh& mesh);

Mesh load_mesh(const std::string& path, MeshFormat format);
void save_mesh(const Mesh& mesh, const std::string& path, MeshFormat format);

/// Infers OFF/OBJ from the file extension.
MeshFormat format_from_path(const std::string& path);

EdgeList build_edges(const Mesh& mesh);

/// Throws BoundaryError unless every edge has exactly two incident faces.
void require_closed(const EdgeList& edges);

Eigen::VectorXd triangle_areas(const Mesh& mesh);

VertexAdjacency one_rings(const Mesh& mesh);
VertexAdjacency one_rings(const Mesh& mesh, const EdgeList& edges);

/// Unit icosphere centered at the origin; subdivisions >= 0
/// (0 = icosahedron, 3 = 642 vertices).
Mesh make_icosphere(int subdivisions);

}  // namespace meshadv

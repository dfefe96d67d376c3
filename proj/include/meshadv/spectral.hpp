// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "meshadv/mesh.hpp"

namespace meshadv {

/// Lumped (diagonal) FEM mass matrix: a_i = one third of incident triangle
/// areas. Sum of entries equals the total surface area.
struct MassMatrix {
  Eigen::VectorXd diag;

  long size() const { return diag.size(); }
  double total_area() const { return diag.sum(); }
};

/// Sparse symmetric cotan stiffness matrix, PSD convention: off-diagonal
/// entries -1/2 (cot a + cot b), diagonal the negated row sum, so W * 1 = 0.
struct StiffnessMatrix {
  struct Entry {
    int col;
    double w;
  };
  std::vector<std::vector<Entry>> rows;  // includes the diagonal entry
  long clamped_cotangents = 0;           // near-degenerate angles hit the clamp

  long size() const { return static_cast<long>(rows.size()); }
  Eigen::MatrixXd to_dense() const;
  /// W * f for an n x d field.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& field) const;
};

/// Leading eigenpairs of W Phi = A Phi diag(lambda), A-orthonormal columns.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;   // k, nondecreasing, lambda_1 ~ 0
  Eigen::MatrixXd eigenvectors;  // n x k, Phi' A Phi = I
  Eigen::VectorXd mass_diag;     // copy of the A diagonal used

  long bandwidth() const { return eigenvalues.size(); }
  long num_vertices() const { return eigenvectors.rows(); }
};

MassMatrix mass_matrix(const Mesh& mesh);
StiffnessMatrix stiffness_matrix(const Mesh& mesh);
StiffnessMatrix stiffness_matrix(const Mesh& mesh, const EdgeList& edges);

SpectralBasis eigendecompose(const StiffnessMatrix& W, const MassMatrix& A, long k);

/// Phi v for k x d coefficients: band-limited synthesis.
Eigen::MatrixXd synthesize(const SpectralBasis& basis, const Eigen::MatrixXd& coeffs);

/// Phi' A f for an n x d field: band-limited analysis.
Eigen::MatrixXd analyze(const SpectralBasis& basis, const Eigen::MatrixXd& field);

/// sqrt(sum_i a_i |V_i|^2), the discrete L2 norm of a vector field.
double field_norm(const MassMatrix& A, const Eigen::MatrixXd& field);

/// Per-vertex magnitude of A^{-1} W X (twice the mean curvature up to the
/// sign convention; the constant cancels in distortion comparisons).
Eigen::VectorXd mean_curvature(const Mesh& mesh, const MassMatrix& A, const StiffnessMatrix& W);

/// Dense A^{-1} W, the operator used by the Laplacian smoothing loss.
Eigen::MatrixXd laplacian_operator(const MassMatrix& A, const StiffnessMatrix& W);

// Binary eigenbasis cache keyed by mesh content hash and bandwidth.
std::uint64_t mesh_content_hash(const Mesh& mesh);
void save_basis(const SpectralBasis& basis, const std::string& path);
SpectralBasis load_basis(const std::string& path);

/// Loads the basis from `cache_dir` if present, otherwise computes and stores
/// it. An empty cache_dir disables caching.
SpectralBasis cached_eigenbasis(const Mesh& mesh, long k, const std::string& cache_dir);

}  // namespace meshadv

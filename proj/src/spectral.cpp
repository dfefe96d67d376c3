// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "meshadv/error.hpp"

namespace meshadv {

namespace {
constexpr double kCotClamp = 1e6;
constexpr char kCacheMagic[8] = {'M', 'A', 'S', 'B', '0', '1', 0, 0};
}  // namespace

Eigen::MatrixXd StiffnessMatrix::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(size(), size());
  for (long i = 0; i < size(); ++i)
    for (const Entry& e : rows[i]) dense(i, e.col) = e.w;
  return dense;
}

Eigen::MatrixXd StiffnessMatrix::apply(const Eigen::MatrixXd& field) const {
  if (field.rows() != size())
    throw DimensionMismatch("stiffness apply: field rows " + std::to_string(field.rows()) +
                            " != " + std::to_string(size()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(field.rows(), field.cols());
  for (long i = 0; i < size(); ++i)
    for (const Entry& e : rows[i]) out.row(i) += e.w * field.row(e.col);
  return out;
}

MassMatrix mass_matrix(const Mesh& mesh) {
  const Eigen::VectorXd areas = triangle_areas(mesh);
  MassMatrix A;
  A.diag = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (long f = 0; f < mesh.num_faces(); ++f)
    for (int t = 0; t < 3; ++t) A.diag(mesh.faces(f, t)) += areas(f) / 3.0;
  return A;
}

StiffnessMatrix stiffness_matrix(const Mesh& mesh, const EdgeList& edges) {
  const long n = mesh.num_vertices();
  StiffnessMatrix W;
  W.rows.assign(n, {});
  std::vector<double> diag(n, 0.0);
  auto clamped_cot = [&](double angle) {
    const double c = std::cos(angle) / std::max(std::sin(angle), 1e-300);
    if (std::abs(c) > kCotClamp) {
      ++W.clamped_cotangents;
      return c > 0 ? kCotClamp : -kCotClamp;
    }
    return c;
  };
  for (const auto& e : edges.edges) {
    double w = clamped_cot(e.alpha);
    if (!e.boundary()) w += clamped_cot(e.beta);
    const double off = -0.5 * w;
    W.rows[e.a].push_back({e.b, off});
    W.rows[e.b].push_back({e.a, off});
    diag[e.a] -= off;
    diag[e.b] -= off;
  }
  for (long i = 0; i < n; ++i) {
    W.rows[i].push_back({static_cast<int>(i), diag[i]});
    std::sort(W.rows[i].begin(), W.rows[i].end(),
              [](const StiffnessMatrix::Entry& a, const StiffnessMatrix::Entry& b) {
                return a.col < b.col;
              });
  }
  return W;
}

StiffnessMatrix stiffness_matrix(const Mesh& mesh) {
  return stiffness_matrix(mesh, build_edges(mesh));
}

SpectralBasis eigendecompose(const StiffnessMatrix& W, const MassMatrix& A, long k) {
  const long n = A.size();
  if (k < 1 || k > n)
    throw DimensionMismatch("bandwidth k=" + std::to_string(k) + " outside [1," +
                            std::to_string(n) + "]");
  // A is diagonal, so the generalized problem reduces to the standard
  // symmetric problem B = A^{-1/2} W A^{-1/2}.
  const Eigen::VectorXd inv_sqrt_a = A.diag.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd B = W.to_dense();
  B = inv_sqrt_a.asDiagonal() * B * inv_sqrt_a.asDiagonal();
  B = 0.5 * (B + B.transpose());  // symmetrize against rounding
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("symmetric eigensolver failed to converge");
  SpectralBasis basis;
  basis.eigenvalues = solver.eigenvalues().head(k);
  basis.eigenvectors = inv_sqrt_a.asDiagonal() * solver.eigenvectors().leftCols(k);
  basis.mass_diag = A.diag;
  // Deterministic sign: largest-magnitude entry of each column positive.
  for (long c = 0; c < k; ++c) {
    long imax = 0;
    basis.eigenvectors.col(c).cwiseAbs().maxCoeff(&imax);
    if (basis.eigenvectors(imax, c) < 0) basis.eigenvectors.col(c) *= -1.0;
  }
  return basis;
}

Eigen::MatrixXd synthesize(const SpectralBasis& basis, const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() != basis.bandwidth())
    throw DimensionMismatch("synthesize: coefficient rows " + std::to_string(coeffs.rows()) +
                            " != bandwidth " + std::to_string(basis.bandwidth()));
  return basis.eigenvectors * coeffs;
}

Eigen::MatrixXd analyze(const SpectralBasis& basis, const Eigen::MatrixXd& field) {
  if (field.rows() != basis.num_vertices())
    throw DimensionMismatch("analyze: field rows " + std::to_string(field.rows()) +
                            " != vertex count " + std::to_string(basis.num_vertices()));
  return basis.eigenvectors.transpose() * (basis.mass_diag.asDiagonal() * field);
}

double field_norm(const MassMatrix& A, const Eigen::MatrixXd& field) {
  if (field.rows() != A.size())
    throw DimensionMismatch("field_norm: field rows " + std::to_string(field.rows()) +
                            " != " + std::to_string(A.size()));
  return std::sqrt((field.rowwise().squaredNorm().array() * A.diag.array()).sum());
}

Eigen::VectorXd mean_curvature(const Mesh& mesh, const MassMatrix& A, const StiffnessMatrix& W) {
  const Eigen::MatrixXd lap = A.diag.cwiseInverse().asDiagonal() * W.apply(mesh.vertices);
  return lap.rowwise().norm();
}

Eigen::MatrixXd laplacian_operator(const MassMatrix& A, const StiffnessMatrix& W) {
  return A.diag.cwiseInverse().asDiagonal() * W.to_dense();
}

std::uint64_t mesh_content_hash(const Mesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const unsigned char* p, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(reinterpret_cast<const unsigned char*>(mesh.vertices.data()),
      sizeof(double) * static_cast<std::size_t>(mesh.vertices.size()));
  mix(reinterpret_cast<const unsigned char*>(mesh.faces.data()),
      sizeof(int) * static_cast<std::size_t>(mesh.faces.size()));
  return h;
}

void save_basis(const SpectralBasis& basis, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::uint64_t n = static_cast<std::uint64_t>(basis.num_vertices());
  const std::uint64_t k = static_cast<std::uint64_t>(basis.bandwidth());
  out.write(kCacheMagic, sizeof(kCacheMagic));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  out.write(reinterpret_cast<const char*>(basis.eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double) * k));
  out.write(reinterpret_cast<const char*>(basis.eigenvectors.data()),
            static_cast<std::streamsize>(sizeof(double) * n * k));
  out.write(reinterpret_cast<const char*>(basis.mass_diag.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
  if (!out) throw IoError("write failed: " + path);
}

SpectralBasis load_basis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[sizeof(kCacheMagic)];
  std::uint64_t n = 0, k = 0;
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
    throw IoError("bad basis cache header: " + path);
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  SpectralBasis basis;
  basis.eigenvalues.resize(static_cast<long>(k));
  basis.eigenvectors.resize(static_cast<long>(n), static_cast<long>(k));
  basis.mass_diag.resize(static_cast<long>(n));
  in.read(reinterpret_cast<char*>(basis.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double) * k));
  in.read(reinterpret_cast<char*>(basis.eigenvectors.data()),
          static_cast<std::streamsize>(sizeof(double) * n * k));
  in.read(reinterpret_cast<char*>(basis.mass_diag.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  if (!in) throw IoError("truncated basis cache: " + path);
  return basis;
}

SpectralBasis cached_eigenbasis(const Mesh& mesh, long k, const std::string& cache_dir) {
  std::string path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    char name[64];
    std::snprintf(name, sizeof(name), "basis_%016llx_k%ld.bin",
                  static_cast<unsigned long long>(mesh_content_hash(mesh)), k);
    path = (std::filesystem::path(cache_dir) / name).string();
    if (std::filesystem::exists(path)) return load_basis(path);
  }
  SpectralBasis basis = eigendecompose(stiffness_matrix(mesh), mass_matrix(mesh), k);
  if (!path.empty()) save_basis(basis, path);
  return basis;
}

}  // namespace meshadv

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/losses.hpp"

#include <cmath>

#include "meshadv/error.hpp"
#include "meshadv/kernels.hpp"

namespace meshadv {

PerceptualContext make_perceptual_context(const Mesh& mesh) {
  PerceptualContext ctx;
  ctx.edges = build_edges(mesh);
  const long ne = ctx.edges.size();
  ctx.edge_len.resize(ne);
  for (long e = 0; e < ne; ++e) {
    const auto& edge = ctx.edges.edges[static_cast<std::size_t>(e)];
    const double len = (mesh.vertices.row(edge.a) - mesh.vertices.row(edge.b)).norm();
    if (len <= 0.0) throw ZeroEdgeError("edge " + std::to_string(e) + " has zero rest length");
    ctx.edge_len(e) = len;
  }
  // Directed pairs: the local-Euclidean sum runs over i and j in NN(i), so
  // every unordered edge contributes twice.
  ctx.pair_from.reserve(static_cast<std::size_t>(2 * ne));
  ctx.pair_to.reserve(static_cast<std::size_t>(2 * ne));
  for (const auto& edge : ctx.edges.edges) {
    ctx.pair_from.push_back(edge.a);
    ctx.pair_to.push_back(edge.b);
    ctx.pair_from.push_back(edge.b);
    ctx.pair_to.push_back(edge.a);
  }
  ctx.pair_len.resize(2 * ne);
  for (long e = 0; e < ne; ++e) {
    ctx.pair_len(2 * e) = ctx.edge_len(e);
    ctx.pair_len(2 * e + 1) = ctx.edge_len(e);
  }
  return ctx;
}

double margin_loss(const Eigen::VectorXd& logits, int target) {
  const long c = logits.size();
  if (c < 2) throw InvalidTarget("margin_loss requires at least 2 classes");
  if (target < 0 || target >= c)
    throw InvalidTarget("target " + std::to_string(target) + " outside [0," + std::to_string(c) +
                        ")");
  double other = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < c; ++i)
    if (i != target) other = std::max(other, logits(i));
  return std::max(0.0, other - logits(target));
}

double untargeted_margin_loss(const Eigen::VectorXd& logits, int truth) {
  const long c = logits.size();
  if (c < 2) throw InvalidTarget("untargeted_margin_loss requires at least 2 classes");
  if (truth < 0 || truth >= c)
    throw InvalidTarget("truth " + std::to_string(truth) + " outside [0," + std::to_string(c) +
                        ")");
  double other = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < c; ++i)
    if (i != truth) other = std::max(other, logits(i));
  return std::max(0.0, logits(truth) - other);
}

double l2_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp) {
  if (x.rows() != xp.rows() || x.cols() != xp.cols())
    throw DimensionMismatch("l2_loss: shape mismatch");
  return (xp - x).norm();
}

double edge_loss(const PerceptualContext& ctx, const Eigen::MatrixXd& xp) {
  double sum = 0.0;
  for (long e = 0; e < ctx.edges.size(); ++e) {
    const auto& edge = ctx.edges.edges[static_cast<std::size_t>(e)];
    const double len = (xp.row(edge.a) - xp.row(edge.b)).norm();
    sum += std::abs(len / ctx.edge_len(e) - 1.0);
  }
  return sum / static_cast<double>(ctx.edges.size());
}

double edge_loss(const Mesh& mesh, const Eigen::MatrixXd& xp) {
  return edge_loss(make_perceptual_context(mesh), xp);
}

double local_euclidean_loss(const PerceptualContext& ctx, const Eigen::MatrixXd& xp) {
  double sum = 0.0;
  for (std::size_t p = 0; p < ctx.pair_from.size(); ++p) {
    const double dp = (xp.row(ctx.pair_from[p]) - xp.row(ctx.pair_to[p])).norm();
    const double d = ctx.pair_len(static_cast<long>(p));
    sum += (d - dp) * (d - dp);
  }
  return sum;
}

double local_euclidean_loss(const Mesh& mesh, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& xp) {
  Mesh at_rest = mesh;
  at_rest.vertices = x;
  return local_euclidean_loss(make_perceptual_context(at_rest), xp);
}

double chamfer_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp) {
  if (x.rows() == 0 || xp.rows() == 0) return 0.0;
  std::vector<int> idx;
  Eigen::VectorXd dist;
  kernels::nearest_neighbors(x, xp, idx, dist);
  return dist.sum();
}

double laplacian_smoothing(const MassMatrix& A, const StiffnessMatrix& W,
                           const Eigen::MatrixXd& perturbation, bool use_mass_inverse) {
  if (perturbation.rows() != A.size())
    throw DimensionMismatch("laplacian_smoothing: field rows " +
                            std::to_string(perturbation.rows()) + " != " +
                            std::to_string(A.size()));
  Eigen::MatrixXd lv = W.apply(perturbation);
  if (use_mass_inverse) lv = A.diag.cwiseInverse().asDiagonal() * lv;
  return static_cast<double>(perturbation.rows()) * lv.squaredNorm();
}

double curvature_distortion(const Mesh& mesh, const Eigen::MatrixXd& xp) {
  const Eigen::VectorXd h0 = mean_curvature(mesh, mass_matrix(mesh), stiffness_matrix(mesh));
  Mesh perturbed = mesh;
  perturbed.vertices = xp;
  const Eigen::VectorXd h1 =
      mean_curvature(perturbed, mass_matrix(perturbed), stiffness_matrix(perturbed));
  return (h0 - h1).cwiseAbs().mean();
}

// ---- tape builders -------------------------------------------------------

int tape_margin_loss(ad::Tape& tape, int logits, int target) {
  const long c = tape.value(logits).cols();
  if (c < 2) throw InvalidTarget("margin_loss requires at least 2 classes");
  if (target < 0 || target >= c)
    throw InvalidTarget("target " + std::to_string(target) + " outside [0," + std::to_string(c) +
                        ")");
  int others;
  if (target == 0) {
    others = tape.slice_cols(logits, 1, c - 1);
  } else if (target == c - 1) {
    others = tape.slice_cols(logits, 0, c - 1);
  } else {
    others = tape.concat_cols(tape.slice_cols(logits, 0, target),
                              tape.slice_cols(logits, target + 1, c - target - 1));
  }
  const int max_other = tape.max_over_axis(others, 1);
  const int zt = tape.slice_cols(logits, target, 1);
  return tape.relu(tape.sub(max_other, zt));
}

int tape_untargeted_margin_loss(ad::Tape& tape, int logits, int truth) {
  const long c = tape.value(logits).cols();
  if (c < 2) throw InvalidTarget("untargeted_margin_loss requires at least 2 classes");
  if (truth < 0 || truth >= c)
    throw InvalidTarget("truth " + std::to_string(truth) + " outside [0," + std::to_string(c) +
                        ")");
  int others;
  if (truth == 0) {
    others = tape.slice_cols(logits, 1, c - 1);
  } else if (truth == c - 1) {
    others = tape.slice_cols(logits, 0, c - 1);
  } else {
    others = tape.concat_cols(tape.slice_cols(logits, 0, truth),
                              tape.slice_cols(logits, truth + 1, c - truth - 1));
  }
  const int max_other = tape.max_over_axis(others, 1);
  const int zt = tape.slice_cols(logits, truth, 1);
  return tape.relu(tape.sub(zt, max_other));
}

int tape_l2_loss(ad::Tape& tape, const Eigen::MatrixXd& x, int xp) {
  const int xc = tape.input(x);
  return tape.sqrt_eps(tape.sum(tape.square(tape.sub(xp, xc))));
}

namespace {

// Per-pair Euclidean lengths of xp restricted to (from, to) index lists.
int tape_pair_lengths(ad::Tape& tape, const std::vector<int>& from, const std::vector<int>& to,
                      int xp) {
  const int pa = tape.gather_rows(xp, from);
  const int pb = tape.gather_rows(xp, to);
  return tape.sqrt_eps(tape.sum_cols(tape.square(tape.sub(pa, pb))));
}

}  // namespace

int tape_edge_loss(ad::Tape& tape, const PerceptualContext& ctx, int xp) {
  std::vector<int> from, to;
  from.reserve(ctx.edges.edges.size());
  to.reserve(ctx.edges.edges.size());
  for (const auto& e : ctx.edges.edges) {
    from.push_back(e.a);
    to.push_back(e.b);
  }
  const int len = tape_pair_lengths(tape, from, to, xp);
  const int inv_rest = tape.input(ctx.edge_len.cwiseInverse());
  const int ratio = tape.mul(len, inv_rest);
  const int ones = tape.input(Eigen::MatrixXd::Ones(ctx.edges.size(), 1));
  return tape.mean(tape.abs(tape.sub(ratio, ones)));
}

int tape_local_euclidean_loss(ad::Tape& tape, const PerceptualContext& ctx, int xp) {
  const int len = tape_pair_lengths(tape, ctx.pair_from, ctx.pair_to, xp);
  const int rest = tape.input(ctx.pair_len);
  return tape.sum(tape.square(tape.sub(rest, len)));
}

int tape_chamfer_loss(ad::Tape& tape, const Eigen::MatrixXd& x, int xp) {
  // Nearest-neighbor assignment is held fixed at the current iterate; the
  // gradient flows through the distances only.
  std::vector<int> idx;
  Eigen::VectorXd dist;
  kernels::nearest_neighbors(x, tape.value(xp), idx, dist);
  Eigen::MatrixXd targets(static_cast<long>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    targets.row(static_cast<long>(i)) = x.row(idx[i]);
  const int tgt = tape.input(targets);
  return tape.sum(tape.sqrt_eps(tape.sum_cols(tape.square(tape.sub(xp, tgt)))));
}

int tape_laplacian_smoothing(ad::Tape& tape, const Eigen::MatrixXd& laplacian_op,
                             int perturbation) {
  const int lop = tape.input(laplacian_op);
  const int lv = tape.matmul(lop, perturbation);
  return tape.scale(tape.sum(tape.square(lv)),
                    static_cast<double>(tape.value(perturbation).rows()));
}

int tape_reconstruction_loss(ad::Tape& tape, const ReconWeights& w,
                             const PerceptualContext& ctx, const Eigen::MatrixXd& x, int xp) {
  int acc = tape.input(Eigen::MatrixXd::Zero(1, 1));
  if (w.l2 != 0.0) acc = tape.add(acc, tape.scale(tape_l2_loss(tape, x, xp), w.l2));
  if (w.edge != 0.0) acc = tape.add(acc, tape.scale(tape_edge_loss(tape, ctx, xp), w.edge));
  if (w.local_euclidean != 0.0)
    acc = tape.add(acc, tape.scale(tape_local_euclidean_loss(tape, ctx, xp), w.local_euclidean));
  if (w.chamfer != 0.0)
    acc = tape.add(acc, tape.scale(tape_chamfer_loss(tape, x, xp), w.chamfer));
  return acc;
}

double reconstruction_loss(const ReconWeights& w, const PerceptualContext& ctx,
                           const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp) {
  double acc = 0.0;
  if (w.l2 != 0.0) acc += w.l2 * l2_loss(x, xp);
  if (w.edge != 0.0) acc += w.edge * edge_loss(ctx, xp);
  if (w.local_euclidean != 0.0) acc += w.local_euclidean * local_euclidean_loss(ctx, xp);
  if (w.chamfer != 0.0) acc += w.chamfer * chamfer_loss(x, xp);
  return acc;
}

}  // namespace meshadv

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "meshadv/grad.hpp"
#include "meshadv/mesh.hpp"
#include "meshadv/spectral.hpp"

namespace meshadv {

/// Additive decomposition of an attack objective:
/// total = misclassification + c * reconstruction + smoothing_weight * smoothing.
struct LossBreakdown {
  double misclassification = 0.0;
  double reconstruction = 0.0;
  double smoothing = 0.0;
  double c = 1.0;
  double smoothing_weight = 0.0;
  double total = 0.0;

  static LossBreakdown make(double mis, double recon, double smooth, double c,
                            double smoothing_weight) {
    LossBreakdown b;
    b.misclassification = mis;
    b.reconstruction = recon;
    b.smoothing = smooth;
    b.c = c;
    b.smoothing_weight = smoothing_weight;
    b.total = mis + c * recon + smoothing_weight * smooth;
    return b;
  }
};

/// Precomputed combinatorics and rest lengths for the perceptibility losses.
struct PerceptualContext {
  EdgeList edges;
  Eigen::VectorXd edge_len;           // per unordered edge, rest lengths
  std::vector<int> pair_from, pair_to;  // directed one-ring pairs (both ways)
  Eigen::VectorXd pair_len;           // rest lengths per directed pair
};

PerceptualContext make_perceptual_context(const Mesh& mesh);

// -- Plain (non-differentiable-path) metrics -------------------------------

/// max(0, max_{i != t} Z_i - Z_t); zero iff the target class strictly wins
/// (lowest-index argmax tie rule).
double margin_loss(const Eigen::VectorXd& logits, int target);

/// Hinge that is zero iff the prediction differs from `truth`:
/// max(0, Z_truth - max_{i != truth} Z_i).
double untargeted_margin_loss(const Eigen::VectorXd& logits, int truth);

double l2_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp);

double edge_loss(const PerceptualContext& ctx, const Eigen::MatrixXd& xp);
double edge_loss(const Mesh& mesh, const Eigen::MatrixXd& xp);

double local_euclidean_loss(const PerceptualContext& ctx, const Eigen::MatrixXd& xp);
double local_euclidean_loss(const Mesh& mesh, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& xp);

/// One-directional unsquared Chamfer: sum over rows of xp of the distance to
/// the nearest row of x.
double chamfer_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp);

/// Per-shape smoothing term n * |L V|_F^2 with L = A^{-1} W (or W when
/// `use_mass_inverse` is false). Batch averaging happens at the call site.
double laplacian_smoothing(const MassMatrix& A, const StiffnessMatrix& W,
                           const Eigen::MatrixXd& perturbation, bool use_mass_inverse = true);

/// Mean over vertices of |H(X) - H(X')| with both curvatures computed on the
/// original connectivity.
double curvature_distortion(const Mesh& mesh, const Eigen::MatrixXd& xp);

// -- Tape builders for the differentiable path -----------------------------
// Each returns the node id of a scalar loss on `tape`.

int tape_margin_loss(ad::Tape& tape, int logits, int target);
int tape_untargeted_margin_loss(ad::Tape& tape, int logits, int truth);
int tape_l2_loss(ad::Tape& tape, const Eigen::MatrixXd& x, int xp);
int tape_edge_loss(ad::Tape& tape, const PerceptualContext& ctx, int xp);
int tape_local_euclidean_loss(ad::Tape& tape, const PerceptualContext& ctx, int xp);
int tape_chamfer_loss(ad::Tape& tape, const Eigen::MatrixXd& x, int xp);
/// laplacian_op is the dense operator applied to the perturbation field node.
int tape_laplacian_smoothing(ad::Tape& tape, const Eigen::MatrixXd& laplacian_op,
                             int perturbation);

/// Which reconstruction losses enter the objective and with what weights.
struct ReconWeights {
  double l2 = 0.0;
  double edge = 0.0;
  double local_euclidean = 1.0;
  double chamfer = 0.0;

  bool any() const { return l2 != 0 || edge != 0 || local_euclidean != 0 || chamfer != 0; }
};

/// Weighted sum of the enabled reconstruction losses as a tape scalar.
int tape_reconstruction_loss(ad::Tape& tape, const ReconWeights& w,
                             const PerceptualContext& ctx, const Eigen::MatrixXd& x, int xp);

/// Same mixture evaluated without a tape.
double reconstruction_loss(const ReconWeights& w, const PerceptualContext& ctx,
                           const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp);

}  // namespace meshadv

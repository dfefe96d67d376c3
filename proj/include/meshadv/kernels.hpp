// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace meshadv::kernels {

// Data-parallel inner loops shared by the loss metrics. Each output element
// is owned by exactly one iteration, so the OpenMP versions are bitwise
// deterministic regardless of thread count. The serial versions in
// kernels::reference are the oracles used by the tests and the benchmark.

/// For every row of `query`, the index of the nearest row of `points` and the
/// (unsquared) Euclidean distance to it. Ties break to the lowest index.
void nearest_neighbors(const Eigen::MatrixXd& points, const Eigen::MatrixXd& query,
                       std::vector<int>& nn_index, Eigen::VectorXd& nn_dist);

/// Per-pair squared discrepancy of neighbor distances between X and Xp for a
/// directed pair list; `out` gets one partial sum per pair.
void pair_distance_discrepancy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                               const std::vector<int>& from, const std::vector<int>& to,
                               Eigen::VectorXd& out);

namespace reference {

void nearest_neighbors(const Eigen::MatrixXd& points, const Eigen::MatrixXd& query,
                       std::vector<int>& nn_index, Eigen::VectorXd& nn_dist);

void pair_distance_discrepancy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                               const std::vector<int>& from, const std::vector<int>& to,
                               Eigen::VectorXd& out);

}  // namespace reference

}  // namespace meshadv::kernels

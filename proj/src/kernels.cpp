// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/kernels.hpp"

#include <cmath>

namespace meshadv::kernels {

namespace reference {

void nearest_neighbors(const Eigen::MatrixXd& points, const Eigen::MatrixXd& query,
                       std::vector<int>& nn_index, Eigen::VectorXd& nn_dist) {
  nn_index.assign(static_cast<std::size_t>(query.rows()), 0);
  nn_dist.resize(query.rows());
  for (long q = 0; q < query.rows(); ++q) {
    int best = 0;
    double best_d2 = (points.row(0) - query.row(q)).squaredNorm();
    for (long p = 1; p < points.rows(); ++p) {
      const double d2 = (points.row(p) - query.row(q)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(p);
      }
    }
    nn_index[static_cast<std::size_t>(q)] = best;
    nn_dist(q) = std::sqrt(best_d2);
  }
}

void pair_distance_discrepancy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                               const std::vector<int>& from, const std::vector<int>& to,
                               Eigen::VectorXd& out) {
  out.resize(static_cast<long>(from.size()));
  for (std::size_t p = 0; p < from.size(); ++p) {
    const double d = (x.row(from[p]) - x.row(to[p])).norm();
    const double dp = (xp.row(from[p]) - xp.row(to[p])).norm();
    out(static_cast<long>(p)) = (d - dp) * (d - dp);
  }
}

}  // namespace reference

void nearest_neighbors(const Eigen::MatrixXd& points, const Eigen::MatrixXd& query,
                       std::vector<int>& nn_index, Eigen::VectorXd& nn_dist) {
  nn_index.assign(static_cast<std::size_t>(query.rows()), 0);
  nn_dist.resize(query.rows());
#pragma omp parallel for schedule(static)
  for (long q = 0; q < query.rows(); ++q) {
    int best = 0;
    double best_d2 = (points.row(0) - query.row(q)).squaredNorm();
    for (long p = 1; p < points.rows(); ++p) {
      const double d2 = (points.row(p) - query.row(q)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(p);
      }
    }
    nn_index[static_cast<std::size_t>(q)] = best;
    nn_dist(q) = std::sqrt(best_d2);
  }
}

void pair_distance_discrepancy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                               const std::vector<int>& from, const std::vector<int>& to,
                               Eigen::VectorXd& out) {
  out.resize(static_cast<long>(from.size()));
  const long np = static_cast<long>(from.size());
#pragma omp parallel for schedule(static)
  for (long p = 0; p < np; ++p) {
    const double d = (x.row(from[static_cast<std::size_t>(p)]) -
                      x.row(to[static_cast<std::size_t>(p)]))
                         .norm();
    const double dp = (xp.row(from[static_cast<std::size_t>(p)]) -
                       xp.row(to[static_cast<std::size_t>(p)]))
                          .norm();
    out(p) = (d - dp) * (d - dp);
  }
}

}  // namespace meshadv::kernels

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace meshadv::ad {

/// Define-by-run reverse-mode tape over dense 2-D double tensors (scalars are
/// 1x1). One tape per thread of execution; nodes are referenced by index.
///
/// Every primitive checks its output for NaN/Inf and aborts with the op name,
/// so a diverging optimization fails loudly at the op that produced it.
class Tape {
 public:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;  // allocated during backward for needs_grad nodes
    bool needs_grad = false;
    const char* op = "input";
    std::function<void(Tape&)> vjp;  // accumulates into parent grads
  };

  /// Records a leaf. requires_grad leaves receive gradients from backward().
  int input(const Eigen::MatrixXd& value, bool requires_grad = false);

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);  // elementwise
  int matmul(int a, int b);
  int relu(int a);
  /// axis 0: column-wise max over rows (r x c -> 1 x c); axis 1: row-wise
  /// (r x c -> r x 1). Ties break to the lowest index.
  int max_over_axis(int a, int axis);
  int sum(int a);
  int mean(int a);
  int sum_cols(int a);   // r x c -> r x 1
  int mean_rows(int a);  // r x c -> 1 x c
  int square(int a);
  int sqrt_eps(int a, double eps = 1e-12);
  int exp(int a);
  int log_eps(int a, double eps = 1e-300);
  int abs(int a);
  int concat_cols(int a, int b);
  int slice_cols(int a, long col0, long count);
  int slice_rows(int a, long row0, long count);
  int broadcast_rows(int a, long rows);  // 1 x c -> rows x c
  int gather_rows(int a, std::vector<int> indices);
  int scale(int a, double s);
  /// Row-major reinterpretation to rows x cols (element count preserved).
  int reshape(int a, long rows, long cols);

  /// root must be scalar (1x1). Computes gradients for every needs_grad node.
  void backward(int root);

  const Eigen::MatrixXd& value(int id) const { return nodes_[id].value; }
  const Eigen::MatrixXd& grad(int id) const;

  long size() const { return static_cast<long>(nodes_.size()); }

 private:
  int emit(const char* op, Eigen::MatrixXd value, bool needs_grad,
           std::function<void(Tape&)> vjp);
  void check_id(int id) const;

  std::vector<Node> nodes_;
};

}  // namespace meshadv::ad

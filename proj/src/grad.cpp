// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/grad.hpp"

#include <cmath>
#include <utility>

#include "meshadv/error.hpp"

namespace meshadv::ad {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch(std::string(op) + ": shapes (" + std::to_string(a.rows()) + "," +
                        std::to_string(a.cols()) + ") vs (" + std::to_string(b.rows()) + "," +
                        std::to_string(b.cols()) + ")");
}

}  // namespace

void Tape::check_id(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw Error("tape: invalid node id " + std::to_string(id));
}

int Tape::emit(const char* op, Eigen::MatrixXd value, bool needs_grad,
               std::function<void(Tape&)> vjp) {
  if (!value.allFinite()) throw NonFiniteValue(std::string("non-finite value produced by ") + op);
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.op = op;
  node.vjp = std::move(vjp);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(const Eigen::MatrixXd& value, bool requires_grad) {
  return emit("input", value, requires_grad, nullptr);
}

int Tape::add(int a, int b) {
  check_id(a);
  check_id(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "add");
  const int out = static_cast<int>(nodes_.size());
  return emit("add", nodes_[a].value + nodes_[b].value,
              nodes_[a].needs_grad || nodes_[b].needs_grad, [a, b, out](Tape& t) {
                if (t.nodes_[a].needs_grad) t.nodes_[a].grad += t.nodes_[out].grad;
                if (t.nodes_[b].needs_grad) t.nodes_[b].grad += t.nodes_[out].grad;
              });
}

int Tape::sub(int a, int b) {
  check_id(a);
  check_id(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "sub");
  const int out = static_cast<int>(nodes_.size());
  return emit("sub", nodes_[a].value - nodes_[b].value,
              nodes_[a].needs_grad || nodes_[b].needs_grad, [a, b, out](Tape& t) {
                if (t.nodes_[a].needs_grad) t.nodes_[a].grad += t.nodes_[out].grad;
                if (t.nodes_[b].needs_grad) t.nodes_[b].grad -= t.nodes_[out].grad;
              });
}

int Tape::mul(int a, int b) {
  check_id(a);
  check_id(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "mul");
  const int out = static_cast<int>(nodes_.size());
  return emit("mul", nodes_[a].value.cwiseProduct(nodes_[b].value),
              nodes_[a].needs_grad || nodes_[b].needs_grad, [a, b, out](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad += t.nodes_[out].grad.cwiseProduct(t.nodes_[b].value);
                if (t.nodes_[b].needs_grad)
                  t.nodes_[b].grad += t.nodes_[out].grad.cwiseProduct(t.nodes_[a].value);
              });
}

int Tape::matmul(int a, int b) {
  check_id(a);
  check_id(b);
  if (nodes_[a].value.cols() != nodes_[b].value.rows())
    throw ShapeMismatch("matmul: inner dimensions " + std::to_string(nodes_[a].value.cols()) +
                        " vs " + std::to_string(nodes_[b].value.rows()));
  const int out = static_cast<int>(nodes_.size());
  return emit("matmul", nodes_[a].value * nodes_[b].value,
              nodes_[a].needs_grad || nodes_[b].needs_grad, [a, b, out](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad.noalias() += t.nodes_[out].grad * t.nodes_[b].value.transpose();
                if (t.nodes_[b].needs_grad)
                  t.nodes_[b].grad.noalias() += t.nodes_[a].value.transpose() * t.nodes_[out].grad;
              });
}

int Tape::relu(int a) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  return emit("relu", nodes_[a].value.cwiseMax(0.0), nodes_[a].needs_grad, [a, out](Tape& t) {
    if (!t.nodes_[a].needs_grad) return;
    t.nodes_[a].grad +=
        t.nodes_[out].grad.cwiseProduct((t.nodes_[a].value.array() > 0.0).cast<double>().matrix());
  });
}

int Tape::max_over_axis(int a, int axis) {
  check_id(a);
  const Eigen::MatrixXd& v = nodes_[a].value;
  const int out = static_cast<int>(nodes_.size());
  if (axis == 0) {
    Eigen::MatrixXd m(1, v.cols());
    std::vector<long> arg(static_cast<std::size_t>(v.cols()));
    for (long c = 0; c < v.cols(); ++c) {
      long best = 0;
      for (long r = 1; r < v.rows(); ++r)
        if (v(r, c) > v(best, c)) best = r;  // strict > keeps the lowest index on ties
      arg[static_cast<std::size_t>(c)] = best;
      m(0, c) = v(best, c);
    }
    return emit("max_over_axis", std::move(m), nodes_[a].needs_grad,
                [a, out, arg = std::move(arg)](Tape& t) {
                  if (!t.nodes_[a].needs_grad) return;
                  for (long c = 0; c < t.nodes_[out].grad.cols(); ++c)
                    t.nodes_[a].grad(arg[static_cast<std::size_t>(c)], c) +=
                        t.nodes_[out].grad(0, c);
                });
  }
  if (axis == 1) {
    Eigen::MatrixXd m(v.rows(), 1);
    std::vector<long> arg(static_cast<std::size_t>(v.rows()));
    for (long r = 0; r < v.rows(); ++r) {
      long best = 0;
      for (long c = 1; c < v.cols(); ++c)
        if (v(r, c) > v(r, best)) best = c;
      arg[static_cast<std::size_t>(r)] = best;
      m(r, 0) = v(r, best);
    }
    return emit("max_over_axis", std::move(m), nodes_[a].needs_grad,
                [a, out, arg = std::move(arg)](Tape& t) {
                  if (!t.nodes_[a].needs_grad) return;
                  for (long r = 0; r < t.nodes_[out].grad.rows(); ++r)
                    t.nodes_[a].grad(r, arg[static_cast<std::size_t>(r)]) +=
                        t.nodes_[out].grad(r, 0);
                });
  }
  throw ShapeMismatch("max_over_axis: axis must be 0 or 1");
}

int Tape::sum(int a) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = nodes_[a].value.sum();
  return emit("sum", std::move(s), nodes_[a].needs_grad, [a, out](Tape& t) {
    if (t.nodes_[a].needs_grad)
      t.nodes_[a].grad.array() += t.nodes_[out].grad(0, 0);
  });
}

int Tape::mean(int a) {
  check_id(a);
  const double inv = 1.0 / static_cast<double>(nodes_[a].value.size());
  const int out = static_cast<int>(nodes_.size());
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = nodes_[a].value.mean();
  return emit("mean", std::move(s), nodes_[a].needs_grad, [a, out, inv](Tape& t) {
    if (t.nodes_[a].needs_grad)
      t.nodes_[a].grad.array() += inv * t.nodes_[out].grad(0, 0);
  });
}

int Tape::sum_cols(int a) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  return emit("sum_cols", nodes_[a].value.rowwise().sum(), nodes_[a].needs_grad,
              [a, out](Tape& t) {
                if (!t.nodes_[a].needs_grad) return;
                t.nodes_[a].grad.colwise() += t.nodes_[out].grad.col(0);
              });
}

int Tape::mean_rows(int a) {
  check_id(a);
  const double inv = 1.0 / static_cast<double>(nodes_[a].value.rows());
  const int out = static_cast<int>(nodes_.size());
  return emit("mean_rows", nodes_[a].value.colwise().mean(), nodes_[a].needs_grad,
              [a, out, inv](Tape& t) {
                if (!t.nodes_[a].needs_grad) return;
                t.nodes_[a].grad.rowwise() += inv * t.nodes_[out].grad.row(0);
              });
}

int Tape::square(int a) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  return emit("square", nodes_[a].value.array().square().matrix(), nodes_[a].needs_grad,
              [a, out](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad += 2.0 * t.nodes_[out].grad.cwiseProduct(t.nodes_[a].value);
              });
}

int Tape::sqrt_eps(int a, double eps) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  Eigen::MatrixXd root = (nodes_[a].value.array() + eps).sqrt().matrix();
  return emit("sqrt", std::move(root), nodes_[a].needs_grad, [a, out](Tape& t) {
    if (t.nodes_[a].needs_grad)
      t.nodes_[a].grad.array() +=
          t.nodes_[out].grad.array() * 0.5 / t.nodes_[out].value.array();
  });
}

int Tape::exp(int a) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  return emit("exp", nodes_[a].value.array().exp().matrix(), nodes_[a].needs_grad,
              [a, out](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad += t.nodes_[out].grad.cwiseProduct(t.nodes_[out].value);
              });
}

int Tape::log_eps(int a, double eps) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  Eigen::MatrixXd guarded = (nodes_[a].value.array() + eps);
  return emit("log", guarded.array().log().matrix(), nodes_[a].needs_grad,
              [a, out, eps](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad.array() +=
                      t.nodes_[out].grad.array() / (t.nodes_[a].value.array() + eps);
              });
}

int Tape::abs(int a) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  return emit("abs", nodes_[a].value.cwiseAbs(), nodes_[a].needs_grad, [a, out](Tape& t) {
    if (!t.nodes_[a].needs_grad) return;
    // Subgradient 0 at exactly 0.
    t.nodes_[a].grad += t.nodes_[out].grad.cwiseProduct(
        t.nodes_[a].value.unaryExpr([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }));
  });
}

int Tape::concat_cols(int a, int b) {
  check_id(a);
  check_id(b);
  if (nodes_[a].value.rows() != nodes_[b].value.rows())
    throw ShapeMismatch("concat_cols: row counts differ");
  const long ca = nodes_[a].value.cols();
  const long cb = nodes_[b].value.cols();
  Eigen::MatrixXd v(nodes_[a].value.rows(), ca + cb);
  v << nodes_[a].value, nodes_[b].value;
  const int out = static_cast<int>(nodes_.size());
  return emit("concat_cols", std::move(v), nodes_[a].needs_grad || nodes_[b].needs_grad,
              [a, b, out, ca, cb](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad += t.nodes_[out].grad.leftCols(ca);
                if (t.nodes_[b].needs_grad)
                  t.nodes_[b].grad += t.nodes_[out].grad.rightCols(cb);
              });
}

int Tape::slice_cols(int a, long col0, long count) {
  check_id(a);
  if (col0 < 0 || count < 0 || col0 + count > nodes_[a].value.cols())
    throw ShapeMismatch("slice_cols: range out of bounds");
  const int out = static_cast<int>(nodes_.size());
  return emit("slice_cols", nodes_[a].value.middleCols(col0, count), nodes_[a].needs_grad,
              [a, out, col0, count](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad.middleCols(col0, count) += t.nodes_[out].grad;
              });
}

int Tape::slice_rows(int a, long row0, long count) {
  check_id(a);
  if (row0 < 0 || count < 0 || row0 + count > nodes_[a].value.rows())
    throw ShapeMismatch("slice_rows: range out of bounds");
  const int out = static_cast<int>(nodes_.size());
  return emit("slice_rows", nodes_[a].value.middleRows(row0, count), nodes_[a].needs_grad,
              [a, out, row0, count](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad.middleRows(row0, count) += t.nodes_[out].grad;
              });
}

int Tape::broadcast_rows(int a, long rows) {
  check_id(a);
  if (nodes_[a].value.rows() != 1) throw ShapeMismatch("broadcast_rows: input must be 1 x c");
  const int out = static_cast<int>(nodes_.size());
  return emit("broadcast_rows", nodes_[a].value.replicate(rows, 1), nodes_[a].needs_grad,
              [a, out](Tape& t) {
                if (t.nodes_[a].needs_grad)
                  t.nodes_[a].grad.row(0) += t.nodes_[out].grad.colwise().sum();
              });
}

int Tape::gather_rows(int a, std::vector<int> indices) {
  check_id(a);
  const Eigen::MatrixXd& v = nodes_[a].value;
  Eigen::MatrixXd g(static_cast<long>(indices.size()), v.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= v.rows())
      throw ShapeMismatch("gather_rows: index out of range");
    g.row(static_cast<long>(i)) = v.row(indices[i]);
  }
  const int out = static_cast<int>(nodes_.size());
  return emit("gather_rows", std::move(g), nodes_[a].needs_grad,
              [a, out, idx = std::move(indices)](Tape& t) {
                if (!t.nodes_[a].needs_grad) return;
                for (std::size_t i = 0; i < idx.size(); ++i)
                  t.nodes_[a].grad.row(idx[i]) += t.nodes_[out].grad.row(static_cast<long>(i));
              });
}

int Tape::scale(int a, double s) {
  check_id(a);
  const int out = static_cast<int>(nodes_.size());
  return emit("scale", s * nodes_[a].value, nodes_[a].needs_grad, [a, out, s](Tape& t) {
    if (t.nodes_[a].needs_grad) t.nodes_[a].grad += s * t.nodes_[out].grad;
  });
}

int Tape::reshape(int a, long rows, long cols) {
  check_id(a);
  const Eigen::MatrixXd& v = nodes_[a].value;
  if (rows * cols != v.size())
    throw ShapeMismatch("reshape: element count " + std::to_string(v.size()) + " != " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  const long in_cols = v.cols();
  Eigen::MatrixXd r(rows, cols);
  for (long i = 0; i < v.size(); ++i)
    r(i / cols, i % cols) = v(i / in_cols, i % in_cols);
  const int out = static_cast<int>(nodes_.size());
  return emit("reshape", std::move(r), nodes_[a].needs_grad, [a, out, in_cols, cols](Tape& t) {
    if (!t.nodes_[a].needs_grad) return;
    const Eigen::MatrixXd& g = t.nodes_[out].grad;
    for (long i = 0; i < g.size(); ++i)
      t.nodes_[a].grad(i / in_cols, i % in_cols) += g(i / cols, i % cols);
  });
}

void Tape::backward(int root) {
  check_id(root);
  if (nodes_[root].value.rows() != 1 || nodes_[root].value.cols() != 1)
    throw NonScalarRoot("backward: root must be a scalar, got (" +
                        std::to_string(nodes_[root].value.rows()) + "," +
                        std::to_string(nodes_[root].value.cols()) + ")");
  for (auto& node : nodes_)
    if (node.needs_grad) node.grad = Eigen::MatrixXd::Zero(node.value.rows(), node.value.cols());
  if (!nodes_[root].needs_grad)
    nodes_[root].grad = Eigen::MatrixXd::Zero(1, 1);
  nodes_[root].grad(0, 0) = 1.0;
  for (int i = root; i >= 0; --i)
    if (nodes_[i].vjp && nodes_[i].needs_grad) nodes_[i].vjp(*this);
}

const Eigen::MatrixXd& Tape::grad(int id) const {
  check_id(id);
  if (nodes_[id].grad.size() == 0)
    throw Error("tape: gradient not computed for node " + std::to_string(id));
  return nodes_[id].grad;
}

}  // namespace meshadv::ad

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "meshadv/error.hpp"
#include "meshadv/grad.hpp"
#include "meshadv/rng.hpp"

using namespace meshadv;

namespace {

Eigen::MatrixXd random_matrix(long r, long c, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Central finite differences against the tape gradient for a scalar-valued
// builder. Relative error below `tol` element-wise.
void check_gradient(const std::function<int(ad::Tape&, int)>& build, const Eigen::MatrixXd& x0,
                    double tol = 1e-6, double h = 1e-6) {
  ad::Tape tape;
  const int x = tape.input(x0, true);
  const int root = build(tape, x);
  tape.backward(root);
  const Eigen::MatrixXd g = tape.grad(x);
  REQUIRE(g.rows() == x0.rows());
  REQUIRE(g.cols() == x0.cols());
  for (long i = 0; i < x0.rows(); ++i)
    for (long j = 0; j < x0.cols(); ++j) {
      Eigen::MatrixXd xp = x0, xm = x0;
      xp(i, j) += h;
      xm(i, j) -= h;
      ad::Tape tp, tm;
      const double fp = tp.value(build(tp, tp.input(xp)))(0, 0);
      const double fm = tm.value(build(tm, tm.input(xm)))(0, 0);
      const double fd = (fp - fm) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(fd), std::abs(g(i, j))});
      CHECK(std::abs(g(i, j) - fd) / denom < tol);
    }
}

}  // namespace

TEST_CASE("gradients of arithmetic and reduction ops match finite differences") {
  Rng rng(1);
  const Eigen::MatrixXd a = random_matrix(4, 3, rng);
  const Eigen::MatrixXd b = random_matrix(4, 3, rng);
  const Eigen::MatrixXd w = random_matrix(3, 5, rng);

  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.add(x, t.input(b))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.sub(x, t.input(b))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.mul(x, t.input(b))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.square(t.matmul(x, t.input(w)))); },
                 a);
  check_gradient([&](ad::Tape& t, int x) { return t.mean(t.square(x)); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.square(t.sum_cols(x))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.square(t.mean_rows(x))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.scale(x, -2.5)); }, a);
}

TEST_CASE("gradients of nonlinear ops match finite differences") {
  Rng rng(2);
  const Eigen::MatrixXd a = random_matrix(5, 2, rng);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.relu(x)); }, a, 1e-5);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.sqrt_eps(t.square(x))); }, a, 1e-5);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.exp(t.scale(x, 0.3))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.log_eps(t.exp(x))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.abs(x)); }, a, 1e-5);
}

TEST_CASE("gradients of shape ops match finite differences") {
  Rng rng(3);
  const Eigen::MatrixXd a = random_matrix(4, 6, rng);
  const Eigen::MatrixXd b = random_matrix(4, 2, rng);
  check_gradient(
      [&](ad::Tape& t, int x) { return t.sum(t.square(t.concat_cols(x, t.input(b)))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.square(t.slice_cols(x, 1, 3))); }, a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.square(t.slice_rows(x, 1, 2))); }, a);
  check_gradient(
      [&](ad::Tape& t, int x) {
        return t.sum(t.square(t.gather_rows(x, {2, 0, 0, 3})));
      },
      a);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.square(t.reshape(x, 8, 3))); }, a);
  const Eigen::MatrixXd row = random_matrix(1, 5, rng);
  check_gradient(
      [&](ad::Tape& t, int x) { return t.sum(t.square(t.broadcast_rows(x, 7))); }, row);
}

TEST_CASE("max_over_axis gradients and lowest-index tie-breaking") {
  Rng rng(4);
  const Eigen::MatrixXd a = random_matrix(5, 4, rng);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.max_over_axis(x, 0)); }, a, 1e-5);
  check_gradient([&](ad::Tape& t, int x) { return t.sum(t.max_over_axis(x, 1)); }, a, 1e-5);

  // Exact ties route the full gradient to the lowest index.
  Eigen::MatrixXd tied(3, 2);
  tied << 1.0, 0.0, 1.0, 2.0, 1.0, 2.0;
  ad::Tape tape;
  const int x = tape.input(tied, true);
  const int root = tape.sum(tape.max_over_axis(x, 0));
  tape.backward(root);
  Eigen::MatrixXd expected(3, 2);
  expected << 1, 0, 0, 1, 0, 0;
  CHECK(tape.grad(x) == expected);
}

TEST_CASE("10-seed randomized gradient sweep over a composite expression") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed * 7 + 1);
    const Eigen::MatrixXd a = random_matrix(6, 3, rng);
    const Eigen::MatrixXd w = random_matrix(3, 4, rng);
    check_gradient(
        [&](ad::Tape& t, int x) {
          const int h = t.relu(t.matmul(x, t.input(w)));
          const int pooled = t.max_over_axis(h, 0);
          return t.mean(t.square(t.sub(pooled, t.input(Eigen::MatrixXd::Ones(1, 4)))));
        },
        a, 1e-4);
  }
}

TEST_CASE("disconnected leaves get a zero gradient") {
  ad::Tape tape;
  const int used = tape.input(Eigen::MatrixXd::Ones(2, 2), true);
  const int unused = tape.input(Eigen::MatrixXd::Ones(3, 3), true);
  tape.backward(tape.sum(tape.square(used)));
  CHECK(tape.grad(unused) == Eigen::MatrixXd::Zero(3, 3));
}

TEST_CASE("backward rejects non-scalar roots") {
  ad::Tape tape;
  const int x = tape.input(Eigen::MatrixXd::Ones(2, 3), true);
  CHECK_THROWS_AS(tape.backward(x), NonScalarRoot);
}

TEST_CASE("non-finite intermediate values abort with the op name") {
  ad::Tape tape;
  Eigen::MatrixXd big(1, 1);
  big << 1e308;
  const int x = tape.input(big, true);
  try {
    (void)tape.exp(x);  // overflows to Inf
    FAIL("expected NonFiniteValue");
  } catch (const NonFiniteValue& e) {
    CHECK(std::string(e.what()).find("exp") != std::string::npos);
  }
}

TEST_CASE("matmul shape mismatch is rejected") {
  ad::Tape tape;
  const int a = tape.input(Eigen::MatrixXd::Ones(2, 3));
  const int b = tape.input(Eigen::MatrixXd::Ones(2, 3));
  CHECK_THROWS_AS(tape.matmul(a, b), ShapeMismatch);
}

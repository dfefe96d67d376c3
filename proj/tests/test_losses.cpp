// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "meshadv/classifier.hpp"
#include "meshadv/losses.hpp"
#include "meshadv/mesh.hpp"
#include "meshadv/rng.hpp"
#include "meshadv/spectral.hpp"

using namespace meshadv;

namespace {

Mesh bumpy_sphere(int subdivisions, std::uint64_t seed) {
  Mesh m = make_icosphere(subdivisions);
  Rng rng(seed);
  Eigen::RowVector3d d1(rng.normal(), rng.normal(), rng.normal());
  d1.normalize();
  for (long i = 0; i < m.num_vertices(); ++i) {
    const Eigen::RowVector3d p = m.vertices.row(i);
    m.vertices.row(i) = p * (1.0 + 0.12 * std::sin(2.0 * d1.dot(p)));
  }
  return m;
}

Eigen::MatrixXd random_field(long n, Rng& rng, double scale) {
  Eigen::MatrixXd f(n, 3);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < 3; ++j) f(i, j) = scale * rng.normal();
  return f;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  // QR of a random Gaussian matrix, sign-fixed to a proper rotation.
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

// FD check of a tape loss w.r.t. the perturbed vertices.
void check_loss_gradient(const std::function<int(ad::Tape&, int)>& build,
                         const Eigen::MatrixXd& xp0, double tol = 1e-4, double h = 1e-6) {
  ad::Tape tape;
  const int xp = tape.input(xp0, true);
  tape.backward(build(tape, xp));
  const Eigen::MatrixXd g = tape.grad(xp);
  for (long i = 0; i < xp0.rows(); ++i)
    for (long j = 0; j < 3; ++j) {
      Eigen::MatrixXd p = xp0, m = xp0;
      p(i, j) += h;
      m(i, j) -= h;
      ad::Tape tp, tm;
      const double fp = tp.value(build(tp, tp.input(p)))(0, 0);
      const double fm = tm.value(build(tm, tm.input(m)))(0, 0);
      const double fd = (fp - fm) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(fd), std::abs(g(i, j))});
      CHECK(std::abs(g(i, j) - fd) / denom < tol);
    }
}

}  // namespace

TEST_CASE("margin loss is zero exactly when the target wins (1000 random vectors)") {
  Rng rng(17);
  long zero_count = 0;
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd z(10);
    for (long i = 0; i < 10; ++i) z(i) = 4.0 * rng.normal();
    const int target = static_cast<int>(rng.uniform_int(10));
    const double loss = margin_loss(z, target);
    CHECK(loss >= 0.0);
    const bool wins = argmax_lowest(z) == target;
    CHECK((loss == 0.0) == wins);
    if (loss == 0.0) ++zero_count;
  }
  CHECK(zero_count > 50);  // both branches exercised
  CHECK(zero_count < 950);
}

TEST_CASE("untargeted margin loss is zero exactly when the truth loses") {
  Rng rng(18);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd z(7);
    for (long i = 0; i < 7; ++i) z(i) = 3.0 * rng.normal();
    const int truth = static_cast<int>(rng.uniform_int(7));
    CHECK((untargeted_margin_loss(z, truth) == 0.0) == (argmax_lowest(z) != truth));
  }
}

TEST_CASE("zero perturbation gives exactly zero everywhere") {
  const Mesh m = bumpy_sphere(1, 3);
  const PerceptualContext ctx = make_perceptual_context(m);
  const Eigen::MatrixXd& x = m.vertices;
  CHECK(l2_loss(x, x) == 0.0);
  CHECK(edge_loss(ctx, x) == 0.0);
  CHECK(local_euclidean_loss(ctx, x) == 0.0);
  CHECK(chamfer_loss(x, x) == 0.0);
  CHECK(curvature_distortion(m, x) == 0.0);
  const MassMatrix A = mass_matrix(m);
  const StiffnessMatrix W = stiffness_matrix(m);
  CHECK(laplacian_smoothing(A, W, Eigen::MatrixXd::Zero(x.rows(), 3)) == 0.0);
}

TEST_CASE("uniform scale by 2 makes the edge loss exactly 1") {
  const Mesh m = bumpy_sphere(1, 4);
  CHECK(std::abs(edge_loss(m, (2.0 * m.vertices).eval()) - 1.0) < 1e-9);
  // And scale by 0.5 gives 0.5 (|0.5 - 1|).
  CHECK(std::abs(edge_loss(m, (0.5 * m.vertices).eval()) - 0.5) < 1e-9);
}

TEST_CASE("rigid motions are invisible to the intrinsic losses") {
  const Mesh m = bumpy_sphere(1, 5);
  Rng rng(55);
  const Eigen::Matrix3d R = random_rotation(rng);
  const Eigen::RowVector3d t(0.3, -1.2, 0.8);
  const Eigen::MatrixXd moved = (m.vertices * R.transpose()).rowwise() + t;
  const PerceptualContext ctx = make_perceptual_context(m);
  CHECK(edge_loss(ctx, moved) < 1e-9);
  CHECK(local_euclidean_loss(ctx, moved) < 1e-9);
  CHECK(curvature_distortion(m, moved) < 1e-9);
  // Chamfer invariance requires moving both clouds.
  const Eigen::MatrixXd x2 = (m.vertices * R.transpose()).rowwise() + t;
  CHECK(chamfer_loss(x2, moved) < 1e-9);
}

TEST_CASE("l2 loss is the Frobenius norm of the displacement") {
  Rng rng(6);
  const Mesh m = bumpy_sphere(1, 6);
  const Eigen::MatrixXd d = random_field(m.num_vertices(), rng, 0.1);
  CHECK(l2_loss(m.vertices, m.vertices + d) == doctest::Approx(d.norm()).epsilon(1e-12));
}

TEST_CASE("edge loss matches a brute-force edge-ratio mean") {
  const Mesh m = bumpy_sphere(1, 7);
  Rng rng(7);
  const Eigen::MatrixXd xp = m.vertices + random_field(m.num_vertices(), rng, 0.05);
  const EdgeList edges = build_edges(m);
  double acc = 0.0;
  for (const auto& e : edges.edges) {
    const double l0 = (m.vertices.row(e.a) - m.vertices.row(e.b)).norm();
    const double l1 = (xp.row(e.a) - xp.row(e.b)).norm();
    acc += std::abs(l1 / l0 - 1.0);
  }
  acc /= static_cast<double>(edges.size());
  CHECK(edge_loss(m, xp) == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("local-Euclidean loss matches a brute-force one-ring sum") {
  const Mesh m = bumpy_sphere(1, 8);
  Rng rng(8);
  const Eigen::MatrixXd xp = m.vertices + random_field(m.num_vertices(), rng, 0.05);
  const VertexAdjacency adj = one_rings(m);
  double acc = 0.0;
  for (long i = 0; i < m.num_vertices(); ++i)
    for (int j : adj.rings[i]) {
      const double l0 = (m.vertices.row(i) - m.vertices.row(j)).norm();
      const double l1 = (xp.row(i) - xp.row(j)).norm();
      acc += (l1 - l0) * (l1 - l0);
    }
  CHECK(local_euclidean_loss(m, m.vertices, xp) == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("chamfer loss matches a brute-force nearest-neighbor sum") {
  Rng rng(9);
  const Mesh m = bumpy_sphere(1, 9);
  const Eigen::MatrixXd xp = m.vertices + random_field(m.num_vertices(), rng, 0.08);
  double acc = 0.0;
  for (long i = 0; i < xp.rows(); ++i) {
    double best = 1e300;
    for (long j = 0; j < m.vertices.rows(); ++j)
      best = std::min(best, (xp.row(i) - m.vertices.row(j)).norm());
    acc += best;
  }
  CHECK(chamfer_loss(m.vertices, xp) == doctest::Approx(acc).epsilon(1e-12));
  // One-directional: collapsing xp onto an existing vertex keeps it zero.
  Eigen::MatrixXd collapsed = m.vertices;
  collapsed.row(0) = m.vertices.row(1);
  CHECK(chamfer_loss(m.vertices, collapsed) == 0.0);
}

TEST_CASE("laplacian smoothing equals n * |L V|_F^2 for both operator choices") {
  const Mesh m = bumpy_sphere(1, 10);
  Rng rng(10);
  const Eigen::MatrixXd v = random_field(m.num_vertices(), rng, 0.1);
  const MassMatrix A = mass_matrix(m);
  const StiffnessMatrix W = stiffness_matrix(m);
  const double n = static_cast<double>(m.num_vertices());
  const Eigen::MatrixXd L = laplacian_operator(A, W);
  CHECK(laplacian_smoothing(A, W, v, true) ==
        doctest::Approx(n * (L * v).squaredNorm()).epsilon(1e-10));
  CHECK(laplacian_smoothing(A, W, v, false) ==
        doctest::Approx(n * (W.to_dense() * v).squaredNorm()).epsilon(1e-10));
}

TEST_CASE("curvature distortion equals the mean absolute curvature change") {
  const Mesh m = bumpy_sphere(1, 11);
  Rng rng(11);
  const Eigen::MatrixXd xp = m.vertices + random_field(m.num_vertices(), rng, 0.03);
  Mesh perturbed = m;
  perturbed.vertices = xp;
  const Eigen::VectorXd h0 = mean_curvature(m, mass_matrix(m), stiffness_matrix(m));
  const Eigen::VectorXd h1 =
      mean_curvature(perturbed, mass_matrix(perturbed), stiffness_matrix(perturbed));
  CHECK(curvature_distortion(m, xp) ==
        doctest::Approx((h0 - h1).cwiseAbs().mean()).epsilon(1e-10));
}

TEST_CASE("tape losses agree with the plain evaluations") {
  const Mesh m = bumpy_sphere(1, 12);
  Rng rng(12);
  const Eigen::MatrixXd xp = m.vertices + random_field(m.num_vertices(), rng, 0.05);
  const PerceptualContext ctx = make_perceptual_context(m);
  ad::Tape tape;
  const int xpid = tape.input(xp, true);
  CHECK(tape.value(tape_l2_loss(tape, m.vertices, xpid))(0, 0) ==
        doctest::Approx(l2_loss(m.vertices, xp)).epsilon(1e-12));
  CHECK(tape.value(tape_edge_loss(tape, ctx, xpid))(0, 0) ==
        doctest::Approx(edge_loss(ctx, xp)).epsilon(1e-12));
  CHECK(tape.value(tape_local_euclidean_loss(tape, ctx, xpid))(0, 0) ==
        doctest::Approx(local_euclidean_loss(ctx, xp)).epsilon(1e-12));
  // The tape uses sqrt(d^2 + 1e-12) to stay differentiable at zero, so the
  // chamfer comparison gets a correspondingly looser tolerance.
  CHECK(tape.value(tape_chamfer_loss(tape, m.vertices, xpid))(0, 0) ==
        doctest::Approx(chamfer_loss(m.vertices, xp)).epsilon(1e-9));
  const Eigen::MatrixXd L = laplacian_operator(mass_matrix(m), stiffness_matrix(m));
  const int vid = tape.input((xp - m.vertices).eval(), true);
  CHECK(tape.value(tape_laplacian_smoothing(tape, L, vid))(0, 0) ==
        doctest::Approx(laplacian_smoothing(mass_matrix(m), stiffness_matrix(m),
                                            xp - m.vertices))
            .epsilon(1e-10));
}

TEST_CASE("tape loss gradients match finite differences") {
  const Mesh m = bumpy_sphere(0, 13);  // 12 vertices keeps FD affordable
  Rng rng(13);
  const Eigen::MatrixXd xp = m.vertices + random_field(m.num_vertices(), rng, 0.05);
  const PerceptualContext ctx = make_perceptual_context(m);
  const Eigen::MatrixXd L = laplacian_operator(mass_matrix(m), stiffness_matrix(m));

  check_loss_gradient([&](ad::Tape& t, int id) { return tape_l2_loss(t, m.vertices, id); }, xp);
  check_loss_gradient([&](ad::Tape& t, int id) { return tape_edge_loss(t, ctx, id); }, xp);
  check_loss_gradient(
      [&](ad::Tape& t, int id) { return tape_local_euclidean_loss(t, ctx, id); }, xp);
  check_loss_gradient(
      [&](ad::Tape& t, int id) { return tape_chamfer_loss(t, m.vertices, id); }, xp);
  check_loss_gradient(
      [&](ad::Tape& t, int id) {
        const int v = t.sub(id, t.input(m.vertices));
        return tape_laplacian_smoothing(t, L, v);
      },
      xp);
}

TEST_CASE("tape margin losses match their plain counterparts and gradients") {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd z(1, 6);
    for (long i = 0; i < 6; ++i) z(0, i) = 2.0 * rng.normal();
    const int target = static_cast<int>(rng.uniform_int(6));
    ad::Tape tape;
    const int zid = tape.input(z, true);
    CHECK(tape.value(tape_margin_loss(tape, zid, target))(0, 0) ==
          doctest::Approx(margin_loss(z.row(0).transpose(), target)).epsilon(1e-12));
    ad::Tape tape2;
    const int zid2 = tape2.input(z, true);
    CHECK(tape2.value(tape_untargeted_margin_loss(tape2, zid2, target))(0, 0) ==
          doctest::Approx(untargeted_margin_loss(z.row(0).transpose(), target))
              .epsilon(1e-12));
    check_loss_gradient([&](ad::Tape& t, int id) { return tape_margin_loss(t, id, target); },
                        z);
  }
}

TEST_CASE("reconstruction mixture is the weighted sum of enabled losses") {
  const Mesh m = bumpy_sphere(1, 15);
  Rng rng(15);
  const Eigen::MatrixXd xp = m.vertices + random_field(m.num_vertices(), rng, 0.04);
  const PerceptualContext ctx = make_perceptual_context(m);
  ReconWeights w;
  w.l2 = 0.5;
  w.edge = 2.0;
  w.local_euclidean = 1.0;
  w.chamfer = 0.25;
  const double expected = 0.5 * l2_loss(m.vertices, xp) + 2.0 * edge_loss(ctx, xp) +
                          local_euclidean_loss(ctx, xp) + 0.25 * chamfer_loss(m.vertices, xp);
  CHECK(reconstruction_loss(w, ctx, m.vertices, xp) == doctest::Approx(expected).epsilon(1e-12));
  ad::Tape tape;
  const int xpid = tape.input(xp, true);
  CHECK(tape.value(tape_reconstruction_loss(tape, w, ctx, m.vertices, xpid))(0, 0) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("LossBreakdown composes total = mis + c * recon + sw * smooth") {
  const LossBreakdown b = LossBreakdown::make(0.3, 2.0, 5.0, 0.1, 0.01);
  CHECK(b.total == doctest::Approx(0.3 + 0.1 * 2.0 + 0.01 * 5.0).epsilon(1e-15));
}

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "meshadv/classifier.hpp"
#include "meshadv/error.hpp"
#include "meshadv/rng.hpp"

using namespace meshadv;

namespace {

Eigen::MatrixXd random_cloud(long n, Rng& rng, double sx = 1, double sy = 1, double sz = 1) {
  Eigen::MatrixXd m(n, 3);
  for (long i = 0; i < n; ++i) {
    Eigen::RowVector3d p(rng.normal(), rng.normal(), rng.normal());
    p.normalize();
    m.row(i) << sx * p.x(), sy * p.y(), sz * p.z();
  }
  return m;
}

// Two easily separable toy classes: unit spheres vs spheres stretched along z.
std::vector<TrainSample> toy_set(int per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainSample> out;
  for (int i = 0; i < per_class; ++i) {
    out.push_back({random_cloud(48, rng), 0});
    out.push_back({random_cloud(48, rng, 1, 1, 2.2), 1});
  }
  return out;
}

}  // namespace

TEST_CASE("init builds the documented layer stack") {
  Rng rng(1);
  const ClassifierNet net = ClassifierNet::init(10, rng);
  REQUIRE(net.point_layers.size() == 4);
  REQUIRE(net.head_layers.size() == 3);
  CHECK(net.point_layers[0].W.rows() == 3);
  CHECK(net.point_layers[3].W.cols() == 1024);
  CHECK(net.head_layers[2].W.cols() == 10);
  CHECK(net.parameters().size() == 14);
}

TEST_CASE("forward pass is bitwise invariant to point permutations") {
  Rng rng(2);
  const ClassifierNet net = ClassifierNet::init(5, rng);
  // Cloud sizes that are not multiples of any SIMD block width, so remainder
  // rows exercise the row-stable accumulation path.
  for (long n : {64L, 101L, 642L}) {
    const Eigen::MatrixXd pts = random_cloud(n, rng);
    Eigen::MatrixXd shuffled = pts;
    Rng perm(7);
    for (long i = shuffled.rows(); i > 1; --i)
      shuffled.row(i - 1).swap(shuffled.row(perm.uniform_int(static_cast<std::uint64_t>(i))));
    const Eigen::VectorXd a = forward_logits(net, pts);
    const Eigen::VectorXd b = forward_logits(net, shuffled);
    CHECK(a == b);  // exact: max pooling over the same value set
    const Eigen::VectorXd c = forward_logits(net, pts.colwise().reverse());
    CHECK(a == c);  // full reversal moves every row across block boundaries
  }
}

TEST_CASE("hand-rolled two-layer oracle reproduces forward_logits") {
  // Point layer: features (relu x, relu -x, relu z, relu -z); head: linear.
  ClassifierNet net;
  net.classes = 2;
  Linear pl;
  pl.W = Eigen::MatrixXd::Zero(3, 4);
  pl.W(0, 0) = 1;
  pl.W(0, 1) = -1;
  pl.W(2, 2) = 1;
  pl.W(2, 3) = -1;
  pl.b = Eigen::MatrixXd::Zero(1, 4);
  net.point_layers.push_back(pl);
  Linear hd;
  hd.W = Eigen::MatrixXd::Zero(4, 2);
  hd.W(2, 1) = 1.0;  // logit1 = max relu(z)
  hd.b = Eigen::MatrixXd::Zero(1, 2);
  hd.b(0, 0) = 0.5;  // logit0 = 0.5
  net.head_layers.push_back(hd);

  Rng rng(3);
  const Eigen::MatrixXd pts = random_cloud(32, rng);
  const Eigen::VectorXd z = forward_logits(net, pts);
  CHECK(z(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(z(1) == doctest::Approx(std::max(0.0, pts.col(2).maxCoeff())).epsilon(1e-14));
  CHECK(predict(net, pts) == (z(1) > 0.5 ? 1 : 0));
}

TEST_CASE("taped forward equals the plain forward (no dropout)") {
  Rng rng(4);
  const ClassifierNet net = ClassifierNet::init(4, rng);
  const Eigen::MatrixXd pts = random_cloud(40, rng);
  for (bool center : {false, true}) {
    ad::Tape tape;
    ForwardOptions fo;
    fo.center_input = center;
    const TapedClassifier tc = classifier_forward(tape, net, tape.input(pts), fo);
    const Eigen::VectorXd plain = forward_logits(net, pts, center);
    CHECK((tape.value(tc.logits).row(0).transpose() - plain).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("classifier forward gradients w.r.t. points match finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed + 10);
    const ClassifierNet net = ClassifierNet::init(3, rng, {3, 8, 16}, {16, 8});
    const Eigen::MatrixXd pts = random_cloud(10, rng);
    ad::Tape tape;
    const int pid = tape.input(pts, true);
    const TapedClassifier tc = classifier_forward(tape, net, pid);
    const int ce = tape_cross_entropy(tape, tc.logits, 1);
    tape.backward(ce);
    const Eigen::MatrixXd g = tape.grad(pid);
    const double h = 1e-6;
    for (long i = 0; i < pts.rows(); ++i)
      for (long j = 0; j < 3; ++j) {
        Eigen::MatrixXd p = pts, m = pts;
        p(i, j) += h;
        m(i, j) -= h;
        auto eval = [&](const Eigen::MatrixXd& x) {
          ad::Tape t;
          const TapedClassifier c = classifier_forward(t, net, t.input(x));
          return t.value(tape_cross_entropy(t, c.logits, 1))(0, 0);
        };
        const double fd = (eval(p) - eval(m)) / (2 * h);
        const double denom = std::max({1.0, std::abs(fd), std::abs(g(i, j))});
        CHECK(std::abs(g(i, j) - fd) / denom < 1e-4);
      }
  }
}

TEST_CASE("cross entropy matches the closed form and is stable for huge logits") {
  Eigen::MatrixXd z(1, 3);
  z << 1.0, -2.0, 0.5;
  ad::Tape tape;
  const int ce = tape_cross_entropy(tape, tape.input(z), 2);
  const double expected =
      std::log(std::exp(1.0) + std::exp(-2.0) + std::exp(0.5)) - 0.5;
  CHECK(tape.value(ce)(0, 0) == doctest::Approx(expected).epsilon(1e-12));

  Eigen::MatrixXd huge(1, 2);
  huge << 1000.0, 999.0;
  ad::Tape t2;
  const double v = t2.value(tape_cross_entropy(t2, t2.input(huge), 0))(0, 0);
  CHECK(v == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-9));
  CHECK_THROWS_AS(tape_cross_entropy(tape, tape.input(z), 5), InvalidTarget);
}

TEST_CASE("augment applies a rigid motion (distances preserved), z-rotation keeps z") {
  Rng rng(5);
  const Eigen::MatrixXd pts = random_cloud(30, rng);
  for (bool full : {false, true}) {
    Rng arng(77);
    const Eigen::MatrixXd moved = augment(pts, arng, full);
    for (int t = 0; t < 20; ++t) {
      const long i = static_cast<long>(rng.uniform_int(30));
      const long j = static_cast<long>(rng.uniform_int(30));
      CHECK((moved.row(i) - moved.row(j)).norm() ==
            doctest::Approx((pts.row(i) - pts.row(j)).norm()).epsilon(1e-12));
    }
    if (!full) {
      // Vertical-axis rotation: z changes only by the shared translation.
      const Eigen::VectorXd dz = moved.col(2) - pts.col(2);
      CHECK((dz.array() - dz(0)).abs().maxCoeff() < 1e-12);
      CHECK(std::abs(dz(0)) <= 0.1);
    }
  }
}

TEST_CASE("Adam minimizes a quadratic and its state roundtrips") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 2, 5.0);
  Adam opt({&x}, 0.1);
  for (int i = 0; i < 500; ++i) opt.step({2.0 * x});
  CHECK(x.cwiseAbs().maxCoeff() < 1e-3);

  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, 3.0);
  Eigen::MatrixXd b = a;
  Adam oa({&a}, 0.05);
  for (int i = 0; i < 10; ++i) oa.step({2.0 * a});
  std::stringstream state;
  oa.save_state(state);
  Adam ob({&b}, 0.05);
  // Replay b to the same point, then overwrite its state from a's snapshot.
  for (int i = 0; i < 10; ++i) ob.step({2.0 * b});
  ob.load_state(state);
  CHECK(ob.steps_taken() == oa.steps_taken());
  oa.step({2.0 * a});
  ob.step({2.0 * b});
  CHECK(a == b);
}

TEST_CASE("training fits an easily separable toy problem to 100%") {
  const auto train = toy_set(8, 100);
  const auto val = toy_set(3, 200);
  ClassifierTrainConfig cfg;
  cfg.classes = 2;
  cfg.epochs = 40;
  cfg.lr = 1e-3;
  cfg.batch = 4;
  cfg.seed = 0;
  cfg.dropout = 0.0;
  cfg.augment = false;
  const TrainedClassifier t = train_classifier(train, val, val, cfg);
  CHECK(t.report.epochs.back().train_acc == 1.0);
  CHECK(t.report.test_accuracy == 1.0);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const auto train = toy_set(4, 300);
  ClassifierTrainConfig cfg;
  cfg.classes = 2;
  cfg.epochs = 5;
  cfg.batch = 4;
  cfg.seed = 9;
  cfg.dropout = 0.2;
  cfg.augment = true;
  const TrainedClassifier a = train_classifier(train, {}, {}, cfg);
  const TrainedClassifier b = train_classifier(train, {}, {}, cfg);
  REQUIRE(a.report.epochs.size() == b.report.epochs.size());
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
    CHECK(a.report.epochs[i].train_loss == b.report.epochs[i].train_loss);
    CHECK(a.report.epochs[i].train_acc == b.report.epochs[i].train_acc);
  }
  const auto pa = a.net.parameters();
  const auto pb = b.net.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);
}

TEST_CASE("early stopping halts after three qualifying epochs") {
  const auto train = toy_set(8, 400);
  const auto val = toy_set(3, 500);
  ClassifierTrainConfig cfg;
  cfg.classes = 2;
  cfg.epochs = 200;
  cfg.batch = 4;
  cfg.dropout = 0.0;
  cfg.augment = false;
  cfg.early_stop_val_acc = 0.95;
  const TrainedClassifier t = train_classifier(train, val, {}, cfg);
  CHECK(t.report.epochs.size() < 200);
  const std::size_t n = t.report.epochs.size();
  REQUIRE(n >= 3);
  for (std::size_t i = n - 3; i < n; ++i) CHECK(t.report.epochs[i].val_acc >= 0.95);
}

TEST_CASE("checkpoint roundtrip preserves every parameter bit") {
  Rng rng(6);
  const ClassifierNet net = ClassifierNet::init(7, rng, {3, 8, 12}, {12, 6});
  const std::string path =
      (std::filesystem::temp_directory_path() / "t_classifier.ckpt").string();
  save_classifier(net, path);
  const ClassifierNet back = load_classifier(path);
  CHECK(back.classes == 7);
  const auto pa = net.parameters();
  const auto pb = back.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);
  CHECK_THROWS_AS(load_classifier("/nonexistent/x.ckpt"), IoError);
}

TEST_CASE("train report CSV layout") {
  TrainReport r;
  r.epochs.push_back({0, 1.5, 0.25, 1.2, 0.5});
  r.test_accuracy = 0.875;
  const std::string path =
      (std::filesystem::temp_directory_path() / "t_report.csv").string();
  r.write_csv(path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,train_acc,val_loss,val_acc");
  std::getline(in, line);
  CHECK(line == "0,1.5,0.25,1.2,0.5");
  std::getline(in, line);
  CHECK(line == "test_accuracy,0.875");
}

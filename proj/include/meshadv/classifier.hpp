// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "meshadv/grad.hpp"
#include "meshadv/rng.hpp"

namespace meshadv {

/// Dense layer, W is in x out, bias 1 x out.
struct Linear {
  Eigen::MatrixXd W;
  Eigen::MatrixXd b;
};

Linear init_linear(long in, long out, Rng& rng);

/// PointNet-lite: shared per-point MLP, global max pooling, classification
/// head. No input/feature transform networks.
struct ClassifierNet {
  std::vector<Linear> point_layers;  // default 3 -> 64 -> 64 -> 128 -> 1024
  std::vector<Linear> head_layers;   // default 1024 -> 512 -> 256 -> C
  int classes = 0;

  static ClassifierNet init(int classes, Rng& rng,
                            const std::vector<long>& point_widths = {3, 64, 64, 128, 1024},
                            const std::vector<long>& head_widths = {1024, 512, 256});
  std::vector<Eigen::MatrixXd*> parameters();
  std::vector<const Eigen::MatrixXd*> parameters() const;
};

struct ForwardOptions {
  bool train_weights = false;  // record weights as requires_grad inputs
  double dropout = 0.0;        // applied on the 512/256 head activations
  Rng* dropout_rng = nullptr;  // required when dropout > 0
  bool center_input = false;   // subtract the centroid before the MLP
};

struct TapedClassifier {
  std::vector<int> param_ids;  // aligned with ClassifierNet::parameters()
  int logits = -1;             // 1 x C
};

/// Records the classifier forward pass on the tape. `points` is an n x 3 node.
TapedClassifier classifier_forward(ad::Tape& tape, const ClassifierNet& net, int points,
                                   const ForwardOptions& opts = {});

/// Straight Eigen evaluation (no tape, no dropout).
Eigen::VectorXd forward_logits(const ClassifierNet& net, const Eigen::MatrixXd& points,
                               bool center_input = false);

/// argmax of forward, lowest index on ties.
int predict(const ClassifierNet& net, const Eigen::MatrixXd& points, bool center_input = false);
int argmax_lowest(const Eigen::VectorXd& logits);

/// Rotation by a uniform angle about the vertical (z) axis followed by a
/// translation with components uniform in [-0.1, 0.1]. With full_so3, a
/// uniform random rotation instead.
Eigen::MatrixXd augment(const Eigen::MatrixXd& points, Rng& rng, bool full_so3 = false);

/// Stable cross-entropy of a 1 x C logits node against `label`.
int tape_cross_entropy(ad::Tape& tape, int logits, int label);

/// Adam over a fixed parameter list. State is serializable for resume.
class Adam {
 public:
  Adam(std::vector<Eigen::MatrixXd*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(const std::vector<Eigen::MatrixXd>& grads);
  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);
  long steps_taken() const { return t_; }

 private:
  std::vector<Eigen::MatrixXd*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct TrainSample {
  Eigen::MatrixXd points;
  int label = 0;
};

struct ClassifierTrainConfig {
  int classes = 10;
  int epochs = 200;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 0;
  double dropout = 0.3;
  bool augment = true;
  bool full_so3 = false;
  bool center_inputs = false;
  /// Stop once validation accuracy reaches this for 3 consecutive epochs
  /// (0 disables).
  double early_stop_val_acc = 0.0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double test_accuracy = 0.0;
  std::uint64_t seed = 0;
  bool augmented = false;

  void write_csv(const std::string& path) const;
};

struct TrainedClassifier {
  ClassifierNet net;
  TrainReport report;
};

TrainedClassifier train_classifier(const std::vector<TrainSample>& train,
                                   const std::vector<TrainSample>& val,
                                   const std::vector<TrainSample>& test,
                                   const ClassifierTrainConfig& config);

/// Mean cross-entropy and accuracy on a sample set (eval mode).
std::pair<double, double> evaluate_classifier(const ClassifierNet& net,
                                              const std::vector<TrainSample>& samples,
                                              bool center_inputs = false);

void save_classifier(const ClassifierNet& net, const std::string& path);
ClassifierNet load_classifier(const std::string& path);

}  // namespace meshadv

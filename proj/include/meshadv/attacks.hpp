// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "meshadv/classifier.hpp"
#include "meshadv/dataset.hpp"
#include "meshadv/losses.hpp"
#include "meshadv/spectral.hpp"

namespace meshadv {

struct AttackConfig {
  long k = 40;                       // spectral bandwidth
  double lr = 1e-2;                  // Adam step for the coefficients
  int max_iters = 2000;
  int hinge_patience = 25;           // stop after this many hinge==0 iterations
  double recon_improve_tol = 1e-6;   // ...once reconstruction stalls below this
  ReconWeights recon;                // default: local-Euclidean only
  double smoothing_weight = 0.0;
  bool smoothing_use_mass_inverse = true;
  bool center_inputs = false;
  double c = 1.0;                    // hinge multiplier
};

struct CSearchConfig {
  double c0 = 1e-2;
  double growth = 2.0;
  int max_rounds = 12;
  int bisection_steps = 8;
};

struct AttackResult {
  Eigen::MatrixXd x_prime;       // n x 3
  Eigen::MatrixXd coefficients;  // k x 3 (spectral paths; empty for model2)
  Eigen::MatrixXd field;         // n x 3 raw perturbation (model2; empty otherwise)
  int target = -1;               // -1 for untargeted
  int predicted = -1;
  LossBreakdown loss;
  int iterations = 0;
  double c_used = 0.0;
  bool success = false;
};

/// Per-shape spectral optimization attack: Adam over the k x 3 coefficients
/// of the perturbation in the Laplacian eigenbasis, hinge + reconstruction
/// objective. Success means predict(X') == target.
AttackResult optimize_attack(const Mesh& mesh, const SpectralBasis& basis,
                             const ClassifierNet& net, int target, const AttackConfig& config);

/// Exponential search for the smallest hinge weight c that makes `runner`
/// succeed, refined by bisection. Throws NoAttackFound when doubling is
/// exhausted without a success.
AttackResult c_search(const std::function<AttackResult(double)>& runner,
                      const CSearchConfig& config);

enum class GeneratorVariant { Model1, Model2 };

/// PointNet-lite regressor. Model 1 emits k x 3 spectral coefficients from
/// the global feature; Model 2 emits a per-point n x 3 field from per-point
/// features concatenated with the global feature.
struct GeneratorNet {
  GeneratorVariant variant = GeneratorVariant::Model1;
  long k = 40;
  std::vector<Linear> trunk;  // 3 -> 64 -> 64 -> 128 -> 1024
  std::vector<Linear> head;   // Model1: 1024->512->256->3k; Model2: 1088->512->256->3

  static GeneratorNet init(GeneratorVariant variant, long k, Rng& rng);
  std::vector<Eigen::MatrixXd*> parameters();
  std::vector<const Eigen::MatrixXd*> parameters() const;
};

struct TapedGenerator {
  std::vector<int> param_ids;
  int perturbation = -1;  // n x 3 field V (model2) or Phi v (model1)
  int coefficients = -1;  // k x 3 (model1 only)
  int x_prime = -1;       // n x 3
};

/// Records the generator on the tape. `basis` is required for Model 1.
TapedGenerator generator_forward(ad::Tape& tape, const GeneratorNet& gen, int points,
                                 const SpectralBasis* basis, bool train_weights = false);

/// Plain evaluation: X' (and the coefficients / field via out-params).
Eigen::MatrixXd generator_apply(const GeneratorNet& gen, const Eigen::MatrixXd& x,
                                const SpectralBasis* basis,
                                Eigen::MatrixXd* coefficients = nullptr,
                                Eigen::MatrixXd* field = nullptr);

struct GeneratorTrainConfig {
  int epochs = 100;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 0;
  double c = 1.0;               // reconstruction weight in L = L_mis + c L_recon
  ReconWeights recon;
  double smoothing_weight = 0.0;
  bool smoothing_use_mass_inverse = true;
  bool center_inputs = false;
  /// <0: untargeted (hinge on the true class). >=0: targeted with
  /// t = (truth + target_offset) mod C.
  int target_offset = -1;
  std::string resume_path;      // optional checkpoint to continue from
};

struct GeneratorEpochStats {
  int epoch = 0;
  double train_misclass_pct = 0.0, train_target_hit_pct = 0.0;
  double train_recon = 0.0, train_total = 0.0, train_misclass_loss = 0.0;
  double val_misclass_pct = 0.0, val_target_hit_pct = 0.0;
  double val_recon = 0.0, val_total = 0.0, val_misclass_loss = 0.0;
};

/// Preprocessed attack sample: normalized mesh plus cached geometry.
struct AttackSample {
  Mesh mesh;  // normalized
  int label = 0;
  Split split = Split::Train;
  PerceptualContext context;
  SpectralBasis basis;  // bandwidth k (model1 / metrics); may be empty for model2
  MassMatrix mass;
  StiffnessMatrix stiffness;
};

std::vector<AttackSample> prepare_attack_samples(const std::vector<LabeledMesh>& data, long k,
                                                 const std::string& basis_cache_dir);

struct GeneratorTrainResult {
  std::vector<GeneratorEpochStats> epochs;
};

/// Trains the generator against a frozen classifier; epoch metrics mirror the
/// misclassification / reconstruction / total curves.
GeneratorTrainResult train_generator(GeneratorNet& gen,
                                     const std::vector<AttackSample>& samples,
                                     const ClassifierNet& classifier,
                                     const GeneratorTrainConfig& config);

void save_generator(const GeneratorNet& gen, const std::string& path,
                    const Adam* optimizer = nullptr);
GeneratorNet load_generator(const std::string& path, std::vector<char>* optimizer_blob = nullptr);

/// Ratio of max to median vertex displacement; > 10 flags a spiky attack.
double spike_score(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp);

struct SplitMetrics {
  Split split = Split::Train;
  long count = 0;
  double curvature_distortion = 0.0;
  double edge_loss = 0.0;
  double l2 = 0.0;
  double misclass_rate = 0.0;  // predicted != ground truth
};

/// Per-split means of the perceptibility metrics over attack results paired
/// with their source samples. Throws EmptySplit when a requested split has no
/// results.
std::vector<SplitMetrics> evaluate_attacks(const std::vector<AttackResult>& results,
                                           const std::vector<const AttackSample*>& sources);

/// Epoch CSV with columns epoch,split,misclass_pct,recon_loss,total_loss.
void write_generator_epochs_csv(const GeneratorTrainResult& result, const std::string& path);

/// Per-split metric CSV matching the comparison-table layout.
void write_metrics_csv(const std::vector<SplitMetrics>& rows, const std::string& path);

}  // namespace meshadv

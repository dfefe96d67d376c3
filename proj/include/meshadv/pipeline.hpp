// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "meshadv/attacks.hpp"
#include "meshadv/config.hpp"
#include "meshadv/dataset.hpp"

namespace meshadv::pipeline {

/// Ingests `dataset_dir` when set, otherwise synthesizes from `dataset_seed`.
std::vector<LabeledMesh> obtain_dataset(const RunConfig& config);

/// Writes the synthetic dataset (OFF meshes + manifest) into out_dir.
void run_gen_dataset(const RunConfig& config);

/// Trains the classifier; writes classifier.ckpt, train_report.csv, config
/// snapshot and run log into out_dir. Returns the test accuracy.
double run_train_classifier(const RunConfig& config);

struct AttackOptSummary {
  long attempts = 0;
  long successes = 0;
  std::vector<SplitMetrics> metrics;
};

/// Per-shape optimization attacks over the configured split/mesh/target set;
/// writes attacks.csv, metrics.csv, mesh exports and coefficients.
AttackOptSummary run_attack_opt(const RunConfig& config);

struct AttackTrainSummary {
  GeneratorTrainResult training;
  std::vector<SplitMetrics> metrics;
  double mean_spike_score = 0.0;
  bool spiky = false;
};

/// Trains the neural attack generator; writes generator.ckpt, epochs.csv,
/// metrics.csv and attacked-mesh exports into out_dir.
AttackTrainSummary run_attack_train(const RunConfig& config);

/// Aggregates the metrics.csv of each run directory into out_dir/eval.csv
/// with the published reference row appended as a footer.
void run_eval(const RunConfig& config, const std::vector<std::string>& run_dirs);

/// Grid runner: one artifact subdirectory per value of sweep_key.
void run_sweep(const RunConfig& config);

}  // namespace meshadv::pipeline

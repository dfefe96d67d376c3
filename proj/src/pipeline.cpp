// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "meshadv/classifier.hpp"
#include "meshadv/error.hpp"

namespace fs = std::filesystem;

namespace meshadv::pipeline {

namespace {

/// JSON-lines run log; no timestamps so reruns are byte-identical.
class RunLog {
 public:
  explicit RunLog(const std::string& path) : out_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
  }
  void write(const nlohmann::json& j) { out_ << j.dump() << "\n"; }

 private:
  std::ofstream out_;
};

std::string prepare_out_dir(const RunConfig& config) {
  const std::string out_dir = config.get("out_dir");
  fs::create_directories(out_dir);
  config.save((fs::path(out_dir) / "config.txt").string());
  return out_dir;
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw ConfigError("key 'split': '" + s + "' is not train|val|test");
}

ReconWeights recon_from(const RunConfig& config) {
  ReconWeights w;
  w.l2 = config.get_double("loss_l2");
  w.edge = config.get_double("loss_edge");
  w.local_euclidean = config.get_double("loss_local_euclidean");
  w.chamfer = config.get_double("loss_chamfer");
  return w;
}

bool smoothing_uses_mass_inverse(const RunConfig& config) {
  const std::string& v = config.get("laplacian");
  if (v == "mass_inverse") return true;
  if (v == "stiffness") return false;
  throw ConfigError("key 'laplacian': '" + v + "' is not mass_inverse|stiffness");
}

ClassifierNet load_required_classifier(const RunConfig& config) {
  const std::string path = config.get("classifier_path");
  if (path.empty()) throw ConfigError("classifier_path is required for this command");
  return load_classifier(path);
}

int class_count(const std::vector<LabeledMesh>& data) {
  int c = 0;
  for (const auto& lm : data) c = std::max(c, lm.label + 1);
  return c;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::vector<LabeledMesh> obtain_dataset(const RunConfig& config) {
  const std::string dir = config.get("dataset_dir");
  if (!dir.empty()) return ingest_directory(dir);
  SyntheticConfig sc;
  sc.seed = static_cast<std::uint64_t>(config.get_long("dataset_seed"));
  sc.subdivisions = static_cast<int>(config.get_long("subdivisions"));
  sc.classes = static_cast<int>(config.get_long("classes"));
  sc.subjects = static_cast<int>(config.get_long("subjects"));
  sc.class_amplitude = config.get_double("class_amplitude");
  sc.subject_amplitude = config.get_double("subject_amplitude");
  return generate_synthetic(sc);
}

void run_gen_dataset(const RunConfig& config) {
  const std::string out_dir = prepare_out_dir(config);
  const auto data = obtain_dataset(config);
  export_dataset(data, out_dir);
  RunLog log((fs::path(out_dir) / "run.jsonl").string());
  log.write({{"event", "gen-dataset"},
             {"meshes", data.size()},
             {"vertices", data.empty() ? 0 : data[0].mesh.num_vertices()}});
}

double run_train_classifier(const RunConfig& config) {
  const std::string out_dir = prepare_out_dir(config);
  RunLog log((fs::path(out_dir) / "run.jsonl").string());
  const auto data = obtain_dataset(config);
  log.write({{"event", "dataset"}, {"meshes", data.size()}});

  std::vector<TrainSample> train, val, test;
  for (const auto& lm : data) {
    NormalizationRecord rec;
    TrainSample s;
    s.points = normalize(lm.mesh, rec).vertices;
    s.label = lm.label;
    (lm.split == Split::Train ? train : lm.split == Split::Val ? val : test)
        .push_back(std::move(s));
  }

  ClassifierTrainConfig tc;
  tc.classes = class_count(data);
  tc.epochs = static_cast<int>(config.get_long("epochs"));
  tc.lr = config.get_double("lr");
  tc.batch = static_cast<int>(config.get_long("batch"));
  tc.seed = static_cast<std::uint64_t>(config.get_long("seed"));
  tc.dropout = config.get_double("dropout");
  tc.augment = config.get_bool("augment");
  tc.full_so3 = config.get_bool("full_so3");
  tc.center_inputs = config.get_bool("center_inputs");
  tc.early_stop_val_acc = config.get_double("early_stop_val_acc");

  TrainedClassifier trained = train_classifier(train, val, test, tc);
  save_classifier(trained.net, (fs::path(out_dir) / "classifier.ckpt").string());
  trained.report.write_csv((fs::path(out_dir) / "train_report.csv").string());
  log.write({{"event", "trained"},
             {"epochs", trained.report.epochs.size()},
             {"test_accuracy", trained.report.test_accuracy}});
  return trained.report.test_accuracy;
}

AttackOptSummary run_attack_opt(const RunConfig& config) {
  const std::string out_dir = prepare_out_dir(config);
  RunLog log((fs::path(out_dir) / "run.jsonl").string());
  const auto data = obtain_dataset(config);
  const int classes = class_count(data);
  const ClassifierNet net = load_required_classifier(config);

  const Split split = split_from_string(config.get("split"));
  auto subset = filter_split(data, split);
  if (subset.empty()) throw EmptySplit("no meshes in the requested split");
  const long mesh_index = config.get_long("mesh");
  if (mesh_index >= static_cast<long>(subset.size()))
    throw ConfigError("mesh index " + std::to_string(mesh_index) + " out of range");
  if (mesh_index >= 0) subset = {subset[static_cast<std::size_t>(mesh_index)]};

  const long k = config.get_long("k");
  const auto samples = prepare_attack_samples(subset, k, config.get("cache_dir"));

  const long fixed_target = config.get_long("target");
  if (fixed_target >= classes)
    throw ConfigError("target " + std::to_string(fixed_target) + " out of range");
  if (mesh_index >= 0 && fixed_target >= 0 && fixed_target == samples[0].label)
    throw ConfigError("target class equals the true class of the selected mesh");

  AttackConfig ac;
  ac.k = k;
  ac.lr = config.get_double("attack_lr");
  ac.max_iters = static_cast<int>(config.get_long("attack_iters"));
  ac.hinge_patience = static_cast<int>(config.get_long("hinge_patience"));
  ac.recon = recon_from(config);
  ac.smoothing_weight = config.get_double("loss_laplacian_smoothing");
  ac.smoothing_use_mass_inverse = smoothing_uses_mass_inverse(config);
  ac.center_inputs = config.get_bool("center_inputs");
  ac.c = config.get_double("c");

  CSearchConfig cs;
  cs.c0 = config.get_double("c0");
  cs.growth = config.get_double("c_growth");
  cs.max_rounds = static_cast<int>(config.get_long("c_rounds"));
  cs.bisection_steps = static_cast<int>(config.get_long("c_bisection"));
  const bool use_search = config.get_bool("c_search");

  std::ofstream rows((fs::path(out_dir) / "attacks.csv").string());
  if (!rows) throw IoError("cannot open attacks.csv for writing");
  rows << "index,label,target,success,c_used,iterations,misclassification,"
          "reconstruction,smoothing,total\n";

  AttackOptSummary summary;
  std::vector<AttackResult> results;
  std::vector<const AttackSample*> sources;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const AttackSample& s = samples[i];
    save_mesh(s.mesh, (fs::path(out_dir) / ("shape_" + std::to_string(i) + ".off")).string(),
              MeshFormat::OFF);
    std::vector<int> targets;
    if (fixed_target >= 0) {
      if (fixed_target != s.label) targets.push_back(static_cast<int>(fixed_target));
    } else {
      for (int t = 0; t < classes; ++t)
        if (t != s.label) targets.push_back(t);
    }
    for (int t : targets) {
      ++summary.attempts;
      bool found = true;
      AttackResult r;
      try {
        if (use_search) {
          r = c_search([&](double c) {
                AttackConfig one = ac;
                one.c = c;
                return optimize_attack(s.mesh, s.basis, net, t, one);
              },
              cs);
        } else {
          r = optimize_attack(s.mesh, s.basis, net, t, ac);
        }
      } catch (const NoAttackFound&) {
        found = false;
      }
      if (found) {
        summary.successes += r.success ? 1 : 0;
        const std::string tag = "shape_" + std::to_string(i) + "_t" + std::to_string(t);
        Mesh attacked = s.mesh;
        attacked.vertices = r.x_prime;
        save_mesh(attacked, (fs::path(out_dir) / (tag + ".off")).string(), MeshFormat::OFF);
        std::ofstream coeff((fs::path(out_dir) / (tag + "_coeff.csv")).string());
        coeff << "cx,cy,cz\n";
        for (long row = 0; row < r.coefficients.rows(); ++row)
          coeff << fmt_g(r.coefficients(row, 0)) << "," << fmt_g(r.coefficients(row, 1)) << ","
                << fmt_g(r.coefficients(row, 2)) << "\n";
        rows << i << "," << s.label << "," << t << "," << (r.success ? 1 : 0) << ","
             << fmt_g(r.c_used) << "," << r.iterations << "," << fmt_g(r.loss.misclassification)
             << "," << fmt_g(r.loss.reconstruction) << "," << fmt_g(r.loss.smoothing) << ","
             << fmt_g(r.loss.total) << "\n";
        results.push_back(std::move(r));
        sources.push_back(&s);
      } else {
        rows << i << "," << s.label << "," << t << ",0,,,,,,\n";
      }
      log.write({{"event", "attack"},
                 {"index", i},
                 {"label", s.label},
                 {"target", t},
                 {"found", found}});
    }
  }
  if (!results.empty()) {
    summary.metrics = evaluate_attacks(results, sources);
    write_metrics_csv(summary.metrics, (fs::path(out_dir) / "metrics.csv").string());
  }
  log.write({{"event", "summary"},
             {"attempts", summary.attempts},
             {"successes", summary.successes}});
  return summary;
}

AttackTrainSummary run_attack_train(const RunConfig& config) {
  const std::string out_dir = prepare_out_dir(config);
  RunLog log((fs::path(out_dir) / "run.jsonl").string());
  const auto data = obtain_dataset(config);
  const ClassifierNet net = load_required_classifier(config);

  const std::string model = config.get("model");
  GeneratorVariant variant;
  if (model == "model1") {
    variant = GeneratorVariant::Model1;
  } else if (model == "model2") {
    variant = GeneratorVariant::Model2;
  } else {
    throw ConfigError("key 'model': '" + model + "' is not model1|model2 for attack-train");
  }

  const long k = config.get_long("k");
  const auto samples = prepare_attack_samples(data, k, config.get("cache_dir"));

  GeneratorTrainConfig gc;
  gc.epochs = static_cast<int>(config.get_long("epochs"));
  gc.lr = config.get_double("lr");
  gc.batch = static_cast<int>(config.get_long("batch"));
  gc.seed = static_cast<std::uint64_t>(config.get_long("seed"));
  gc.c = config.get_double("c");
  gc.recon = recon_from(config);
  gc.smoothing_weight = config.get_double("loss_laplacian_smoothing");
  gc.smoothing_use_mass_inverse = smoothing_uses_mass_inverse(config);
  gc.center_inputs = config.get_bool("center_inputs");
  gc.target_offset = static_cast<int>(config.get_long("target_offset"));
  gc.resume_path = config.get("resume");

  Rng rng(gc.seed ^ 0x67656e00ULL);
  GeneratorNet gen = GeneratorNet::init(variant, k, rng);

  AttackTrainSummary summary;
  summary.training = train_generator(gen, samples, net, gc);
  save_generator(gen, (fs::path(out_dir) / "generator.ckpt").string());
  write_generator_epochs_csv(summary.training, (fs::path(out_dir) / "epochs.csv").string());

  std::vector<AttackResult> results;
  std::vector<const AttackSample*> sources;
  double spike_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const AttackSample& s = samples[i];
    AttackResult r;
    r.x_prime = generator_apply(gen, s.mesh.vertices,
                                variant == GeneratorVariant::Model1 ? &s.basis : nullptr,
                                &r.coefficients, &r.field);
    r.predicted = predict(net, r.x_prime, gc.center_inputs);
    r.success = r.predicted != s.label;
    spike_sum += spike_score(s.mesh.vertices, r.x_prime);
    if (s.split == Split::Test) {
      const std::string tag = "shape_" + std::to_string(i);
      save_mesh(s.mesh, (fs::path(out_dir) / (tag + ".off")).string(), MeshFormat::OFF);
      Mesh attacked = s.mesh;
      attacked.vertices = r.x_prime;
      save_mesh(attacked, (fs::path(out_dir) / (tag + "_attacked.off")).string(),
                MeshFormat::OFF);
    }
    results.push_back(std::move(r));
    sources.push_back(&s);
  }
  summary.mean_spike_score = spike_sum / static_cast<double>(samples.size());
  summary.spiky = summary.mean_spike_score > 10.0;
  if (summary.spiky) std::ofstream((fs::path(out_dir) / "spiky.flag").string()) << "spiky\n";
  summary.metrics = evaluate_attacks(results, sources);
  write_metrics_csv(summary.metrics, (fs::path(out_dir) / "metrics.csv").string());
  log.write({{"event", "summary"},
             {"epochs", summary.training.epochs.size()},
             {"mean_spike_score", summary.mean_spike_score},
             {"spiky", summary.spiky}});
  return summary;
}

void run_eval(const RunConfig& config, const std::vector<std::string>& run_dirs) {
  const std::string out_dir = prepare_out_dir(config);
  std::ofstream out((fs::path(out_dir) / "eval.csv").string());
  if (!out) throw IoError("cannot open eval.csv for writing");
  out << "run,split,count,curvature_distortion,edge_loss,l2,misclass_rate\n";
  for (const auto& dir : run_dirs) {
    const fs::path metrics = fs::path(dir) / "metrics.csv";
    std::ifstream in(metrics.string());
    if (!in) throw IoError("missing attack directory or metrics: " + metrics.string());
    const std::string run = fs::path(dir).filename().string();
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line))
      if (!line.empty()) out << run << "," << line << "\n";
  }
  // Published FAUST reference: curvature distortion 3.05, L2 0.062.
  out << "reference,test,,3.05,,0.062,\n";
}

void run_sweep(const RunConfig& config) {
  const std::string command = config.get("sweep_command");
  const std::string key = config.get("sweep_key");
  const std::string values = config.get("sweep_values");
  if (command.empty() || key.empty() || values.empty())
    throw ConfigError("sweep requires sweep_command, sweep_key and sweep_values");
  const std::string out_dir = prepare_out_dir(config);

  std::vector<std::string> cells;
  std::stringstream ss(values);
  std::string v;
  while (std::getline(ss, v, ',')) {
    if (!v.empty()) cells.push_back(v);
  }
  if (cells.empty()) throw ConfigError("sweep_values is empty");

  for (const auto& value : cells) {
    RunConfig cell = config;
    cell.set(key, value);
    cell.set("out_dir", (fs::path(out_dir) / (key + "_" + value)).string());
    if (command == "train-classifier") {
      run_train_classifier(cell);
    } else if (command == "attack-opt") {
      run_attack_opt(cell);
    } else if (command == "attack-train") {
      run_attack_train(cell);
    } else {
      throw ConfigError("sweep_command '" + command + "' is not sweepable");
    }
  }
}

}  // namespace meshadv::pipeline

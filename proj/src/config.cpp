// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "meshadv/error.hpp"

namespace meshadv {

const std::vector<RunConfig::KeySpec>& RunConfig::registry() {
  static const std::vector<KeySpec> specs = {
      {"seed", "0", "master RNG seed"},
      {"out_dir", "out", "artifact directory for this run"},
      {"cache_dir", "", "eigenbasis cache directory (empty disables)"},
      {"dataset_dir", "", "mesh directory to ingest; empty synthesizes"},
      {"dataset_seed", "0", "seed for the synthetic dataset"},
      {"classes", "10", "number of classes (synthetic)"},
      {"subjects", "10", "number of subjects (synthetic)"},
      {"subdivisions", "3", "icosphere subdivision level (synthetic)"},
      {"class_amplitude", "0.22", "class deformation amplitude (synthetic)"},
      {"subject_amplitude", "0.05", "subject deformation amplitude (synthetic)"},
      {"k", "40", "spectral bandwidth"},
      {"c", "1", "misclassification/reconstruction trade-off weight"},
      {"c_search", "true", "attack-opt: exponential search over c"},
      {"c0", "0.01", "c-search starting value"},
      {"c_growth", "2", "c-search growth factor"},
      {"c_rounds", "12", "c-search doubling rounds"},
      {"c_bisection", "8", "c-search bisection steps"},
      {"loss_l2", "0", "weight of the L2 reconstruction loss"},
      {"loss_edge", "0", "weight of the edge-length loss"},
      {"loss_local_euclidean", "1", "weight of the local-Euclidean loss"},
      {"loss_chamfer", "0", "weight of the Chamfer loss"},
      {"loss_laplacian_smoothing", "0", "weight of the Laplacian smoothing term"},
      {"laplacian", "mass_inverse", "smoothing operator: mass_inverse | stiffness"},
      {"center_inputs", "false", "subtract the centroid before the classifier MLP"},
      {"model", "model1", "attack variant: model1 | model2 | opt"},
      {"epochs", "100", "training epochs"},
      {"lr", "0.001", "optimizer learning rate"},
      {"batch", "8", "minibatch size"},
      {"dropout", "0.3", "classifier head dropout"},
      {"augment", "true", "rotation/translation augmentation while training"},
      {"full_so3", "false", "augment with full random rotations"},
      {"early_stop_val_acc", "0", "stop once val accuracy holds this level (0 off)"},
      {"attack_iters", "300", "per-attack optimizer iterations"},
      {"attack_lr", "0.01", "per-attack Adam step size"},
      {"hinge_patience", "25", "stop after this many zero-hinge iterations"},
      {"target", "-1", "attack-opt target class; -1 sweeps all wrong classes"},
      {"target_offset", "-1", "generator target = truth + offset mod C; -1 untargeted"},
      {"mesh", "-1", "attack-opt: index within the split; -1 attacks every shape"},
      {"split", "test", "split attacked by attack-opt: train | val | test"},
      {"classifier_path", "", "classifier checkpoint to load"},
      {"generator_path", "", "generator checkpoint to load (eval/export)"},
      {"resume", "", "generator checkpoint to resume training from"},
      {"sweep_command", "", "sweep: subcommand to fan out"},
      {"sweep_key", "", "sweep: config key to vary"},
      {"sweep_values", "", "sweep: comma-separated values for sweep_key"},
  };
  return specs;
}

RunConfig::RunConfig() {
  for (const auto& s : registry()) values_[s.key] = s.def;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return x;
}

long RunConfig::get_long(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  return x;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& s : registry()) out << s.key << "=" << values_.at(s.key) << "\n";
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace meshadv

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: gen-dataset, train-classifier, attack-opt,
// attack-train, eval, sweep. Exit codes: 0 success, 1 runtime failure,
// 2 config/validation error.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshadv/error.hpp"
#include "meshadv/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key=value config file");
  cmd->add_option("--set", args.overrides, "override a config key (key=value), repeatable");
}

meshadv::RunConfig build_config(const CommonArgs& args) {
  meshadv::RunConfig config;
  if (!args.config_path.empty()) config.load(args.config_path);
  for (const auto& o : args.overrides) config.apply_override(o);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smooth adversarial mesh perturbations: spectral and neural attacks"};
  app.require_subcommand(1);

  CommonArgs gen_args, clf_args, opt_args, train_args, eval_args, sweep_args;
  std::vector<std::string> eval_dirs;

  add_common(app.add_subcommand("gen-dataset", "write the synthetic dataset"), gen_args);
  add_common(app.add_subcommand("train-classifier", "train the point-cloud classifier"),
             clf_args);
  add_common(app.add_subcommand("attack-opt", "per-shape spectral optimization attack"),
             opt_args);
  add_common(app.add_subcommand("attack-train", "train a neural attack generator"), train_args);
  CLI::App* eval_cmd = app.add_subcommand("eval", "aggregate run metrics into one table");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("dirs", eval_dirs, "attack artifact directories")->required();
  add_common(app.add_subcommand("sweep", "grid-run a command over listed values"), sweep_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("gen-dataset")) {
      meshadv::pipeline::run_gen_dataset(build_config(gen_args));
    } else if (app.got_subcommand("train-classifier")) {
      const double acc = meshadv::pipeline::run_train_classifier(build_config(clf_args));
      std::printf("test accuracy: %.4f\n", acc);
    } else if (app.got_subcommand("attack-opt")) {
      const auto s = meshadv::pipeline::run_attack_opt(build_config(opt_args));
      std::printf("attacks: %ld/%ld successful\n", s.successes, s.attempts);
    } else if (app.got_subcommand("attack-train")) {
      const auto s = meshadv::pipeline::run_attack_train(build_config(train_args));
      if (!s.training.epochs.empty())
        std::printf("final train misclassification: %.1f%%%s\n",
                    s.training.epochs.back().train_misclass_pct, s.spiky ? " [spiky]" : "");
    } else if (app.got_subcommand("eval")) {
      meshadv::pipeline::run_eval(build_config(eval_args), eval_dirs);
    } else if (app.got_subcommand("sweep")) {
      meshadv::pipeline::run_sweep(build_config(sweep_args));
    }
  } catch (const meshadv::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

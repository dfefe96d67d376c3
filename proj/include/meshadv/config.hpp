// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

namespace meshadv {

/// Flat key=value run configuration. Every tool shares one key registry; a
/// command reads the subset it needs. Unknown keys are rejected on sight so a
/// typo in a config file or --set override fails before any work is done.
class RunConfig {
 public:
  struct KeySpec {
    const char* key;
    const char* def;
    const char* doc;
  };

  RunConfig();

  static const std::vector<KeySpec>& registry();

  /// Throws ConfigError for keys not in the registry.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Parses key=value lines; '#' starts a comment, blank lines are skipped.
  void load(const std::string& path);
  /// Writes every key (registry order), losslessly re-loadable.
  void save(const std::string& path) const;

  /// Applies a "key=value" override string (CLI form).
  void apply_override(const std::string& assignment);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace meshadv

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "meshadv/mesh.hpp"
#include "meshadv/rng.hpp"

namespace meshadv {

enum class Split { Train, Val, Test };

const char* split_name(Split s);

struct LabeledMesh {
  Mesh mesh;
  int label = 0;    // class ("pose" analog), in [0, 10)
  int subject = 0;  // identity analog, in [0, 10)
  Split split = Split::Train;
};

/// Centroid/scale applied by normalize(); stores the inverse transform.
struct NormalizationRecord {
  Eigen::RowVector3d centroid = Eigen::RowVector3d::Zero();
  double scale = 1.0;

  Eigen::MatrixXd apply_inverse(const Eigen::MatrixXd& vertices) const;
};

struct ManifestEntry {
  std::string path;
  int label = 0;
  int subject = 0;
  Split split = Split::Train;
};

struct SyntheticConfig {
  std::uint64_t seed = 0;
  int subdivisions = 3;        // icosphere level; 3 -> 642 vertices
  int classes = 10;
  int subjects = 10;
  double class_amplitude = 0.22;
  double subject_amplitude = 0.05;
};

/// 10 classes x 10 subjects of fixed-topology deformed icospheres. Class
/// deformations are distinct low-frequency height-profile patterns; subject
/// variations are smooth random fields shared across classes.
std::vector<LabeledMesh> generate_synthetic(const SyntheticConfig& config);

/// Centers the centroid at the origin and scales to the unit bounding sphere.
Mesh normalize(const Mesh& mesh, NormalizationRecord& record);

/// Loads a directory of OFF/OBJ files named tr_reg_CSS.* (C = class digit,
/// SS = subject) or described by a manifest.jsonl; verifies that all meshes
/// share the same topology.
std::vector<LabeledMesh> ingest_directory(const std::string& path);

/// The deterministic 70/15/15 split: subjects 0-6 train, subject 7 val,
/// subject 9 test, subject 8 alternating val/test by class parity.
Split assign_split(int label, int subject);

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);
std::vector<ManifestEntry> read_manifest(const std::string& path);

/// Writes the meshes as OFF files plus manifest.jsonl under `dir`.
void export_dataset(const std::vector<LabeledMesh>& data, const std::string& dir);

std::vector<LabeledMesh> filter_split(const std::vector<LabeledMesh>& data, Split split);

}  // namespace meshadv

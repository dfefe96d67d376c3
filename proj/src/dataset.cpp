// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "meshadv/error.hpp"

namespace fs = std::filesystem;

namespace meshadv {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

namespace {

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw LabelParseError("unknown split tag '" + name + "'");
}

// Smooth random radial field used for subject identity; seeded by subject
// only, so it is shared across classes.
struct SubjectField {
  struct Wave {
    Eigen::RowVector3d dir;
    double freq, phase, weight;
  };
  std::vector<Wave> waves;

  static SubjectField make(Rng rng) {
    SubjectField f;
    for (int j = 0; j < 4; ++j) {
      Wave w;
      Eigen::RowVector3d d(rng.normal(), rng.normal(), rng.normal());
      w.dir = d.normalized();
      w.freq = rng.uniform(1.0, 3.0);
      w.phase = rng.uniform(0.0, 2.0 * M_PI);
      w.weight = rng.uniform(0.5, 1.0);
      f.waves.push_back(w);
    }
    return f;
  }

  double eval(const Eigen::RowVector3d& p) const {
    double s = 0.0;
    for (const auto& w : waves) s += w.weight * std::sin(w.freq * w.dir.dot(p) + w.phase);
    return s / static_cast<double>(waves.size());
  }
};

}  // namespace

Split assign_split(int label, int subject) {
  if (subject <= 6) return Split::Train;
  if (subject == 7) return Split::Val;
  if (subject == 9) return Split::Test;
  return label % 2 == 0 ? Split::Val : Split::Test;
}

std::vector<LabeledMesh> generate_synthetic(const SyntheticConfig& config) {
  const Mesh base = make_icosphere(config.subdivisions);
  const long n = base.num_vertices();
  if (n < 500 || n > 4000)
    throw ConfigError("subdivision level " + std::to_string(config.subdivisions) +
                      " yields n=" + std::to_string(n) + " outside [500, 4000]");
  Rng root(config.seed ^ 0xda7a5e7ULL);
  std::vector<SubjectField> subjects;
  for (int s = 0; s < config.subjects; ++s) subjects.push_back(SubjectField::make(root.fork(s)));

  std::vector<LabeledMesh> out;
  out.reserve(static_cast<std::size_t>(config.classes * config.subjects));
  for (int c = 0; c < config.classes; ++c) {
    // Class signature: a height-profile wave whose frequency identifies the
    // class. Depends on z only, so the vertical-axis training augmentation
    // cannot wash it out.
    const double omega = 1.0 + static_cast<double>(c);
    const double phase = 0.6 * static_cast<double>(c);
    for (int s = 0; s < config.subjects; ++s) {
      LabeledMesh lm;
      lm.label = c;
      lm.subject = s;
      lm.split = assign_split(c, s);
      lm.mesh = base;
      for (long i = 0; i < n; ++i) {
        const Eigen::RowVector3d p = base.vertices.row(i);
        const double class_term =
            config.class_amplitude * std::sin(omega * M_PI * p.z() + phase);
        const double subject_term = config.subject_amplitude * subjects[s].eval(p);
        lm.mesh.vertices.row(i) = p * (1.0 + class_term + subject_term);
      }
      out.push_back(std::move(lm));
    }
  }
  return out;
}

Eigen::MatrixXd NormalizationRecord::apply_inverse(const Eigen::MatrixXd& vertices) const {
  return ((vertices * scale).rowwise() + centroid).eval();
}

Mesh normalize(const Mesh& mesh, NormalizationRecord& record) {
  record.centroid = mesh.vertices.colwise().mean();
  Mesh out = mesh;
  out.vertices.rowwise() -= record.centroid;
  record.scale = out.vertices.rowwise().norm().maxCoeff();
  if (record.scale <= 0.0) record.scale = 1.0;
  out.vertices /= record.scale;
  return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& e : entries) {
    nlohmann::json j;
    j["path"] = e.path;
    j["class"] = e.label;
    j["subject"] = e.subject;
    j["split"] = split_name(e.split);
    out << j.dump() << "\n";
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("manifest: ") + e.what(), lineno);
    }
    ManifestEntry e;
    try {
      e.path = j.at("path").get<std::string>();
      e.label = j.at("class").get<int>();
      e.subject = j.at("subject").get<int>();
      e.split = split_from_name(j.at("split").get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
      throw LabelParseError(std::string("manifest line ") + std::to_string(lineno) + ": " +
                            ex.what());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

void check_topology(const std::vector<LabeledMesh>& meshes) {
  for (std::size_t i = 1; i < meshes.size(); ++i) {
    if (meshes[i].mesh.num_vertices() != meshes[0].mesh.num_vertices() ||
        meshes[i].mesh.num_faces() != meshes[0].mesh.num_faces() ||
        (meshes[i].mesh.faces.array() != meshes[0].mesh.faces.array()).any())
      throw InconsistentTopologyError("mesh " + std::to_string(i) +
                                      " does not share the reference connectivity");
  }
}

std::uint64_t pair_hash(int label, int subject) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  h ^= static_cast<std::uint64_t>(label) + 0x517cc1b727220a95ULL + (h << 6) + (h >> 2);
  h *= 0xff51afd7ed558ccdULL;
  h ^= static_cast<std::uint64_t>(subject) + 0x6a09e667f3bcc909ULL + (h << 6) + (h >> 2);
  h *= 0xc4ceb9fe1a85ec53ULL;
  return h ^ (h >> 33);
}

}  // namespace

std::vector<LabeledMesh> ingest_directory(const std::string& path) {
  const fs::path dir(path);
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + path);
  std::vector<LabeledMesh> out;
  const fs::path manifest = dir / "manifest.jsonl";
  if (fs::exists(manifest)) {
    for (const auto& e : read_manifest(manifest.string())) {
      LabeledMesh lm;
      const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : dir / e.path;
      lm.mesh = load_mesh(p.string(), format_from_path(p.string()));
      lm.label = e.label;
      lm.subject = e.subject;
      lm.split = e.split;
      out.push_back(std::move(lm));
    }
    check_topology(out);
    return out;
  }
  // No manifest: parse tr_reg_CSS.{off,obj} names, split by (class, subject)
  // hash rank with exact 70/15/15 proportions.
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("tr_reg_", 0) != 0) continue;
    const std::string ext = entry.path().extension().string();
    if (ext != ".off" && ext != ".obj") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no tr_reg_* meshes and no manifest.jsonl in " + path);
  for (const auto& p : files) {
    const std::string stem = p.stem().string();  // tr_reg_CSS
    const std::string digits = stem.substr(7);
    if (digits.size() != 3 || !std::isdigit(static_cast<unsigned char>(digits[0])) ||
        !std::isdigit(static_cast<unsigned char>(digits[1])) ||
        !std::isdigit(static_cast<unsigned char>(digits[2])))
      throw LabelParseError("cannot parse class/subject from '" + stem + "'");
    LabeledMesh lm;
    lm.mesh = load_mesh(p.string(), format_from_path(p.string()));
    lm.label = digits[0] - '0';
    lm.subject = (digits[1] - '0') * 10 + (digits[2] - '0');
    out.push_back(std::move(lm));
  }
  check_topology(out);
  // Rank by hash, then cut at exact 70% / 85%.
  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pair_hash(out[a].label, out[a].subject) < pair_hash(out[b].label, out[b].subject);
  });
  const std::size_t n_train = out.size() * 70 / 100;
  const std::size_t n_val = out.size() * 15 / 100;
  for (std::size_t r = 0; r < order.size(); ++r)
    out[order[r]].split =
        r < n_train ? Split::Train : (r < n_train + n_val ? Split::Val : Split::Test);
  return out;
}

void export_dataset(const std::vector<LabeledMesh>& data, const std::string& dir) {
  fs::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const auto& lm : data) {
    char name[64];
    std::snprintf(name, sizeof(name), "tr_reg_%d%02d.off", lm.label, lm.subject);
    save_mesh(lm.mesh, (fs::path(dir) / name).string(), MeshFormat::OFF);
    ManifestEntry e;
    e.path = name;
    e.label = lm.label;
    e.subject = lm.subject;
    e.split = lm.split;
    entries.push_back(std::move(e));
  }
  write_manifest(entries, (fs::path(dir) / "manifest.jsonl").string());
}

std::vector<LabeledMesh> filter_split(const std::vector<LabeledMesh>& data, Split split) {
  std::vector<LabeledMesh> out;
  for (const auto& lm : data)
    if (lm.split == split) out.push_back(lm);
  return out;
}

}  // namespace meshadv

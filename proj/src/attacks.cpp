// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "meshadv/error.hpp"

namespace meshadv {

namespace {
constexpr char kGeneratorMagic[8] = {'M', 'A', 'G', 'K', '0', '1', 0, 0};

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  const std::uint64_t r = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t c = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&r), sizeof(r));
  out.write(reinterpret_cast<const char*>(&c), sizeof(c));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * r * c));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  std::uint64_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), sizeof(r));
  in.read(reinterpret_cast<char*>(&c), sizeof(c));
  Eigen::MatrixXd m(static_cast<long>(r), static_cast<long>(c));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * r * c));
  return m;
}

}  // namespace

AttackResult optimize_attack(const Mesh& mesh, const SpectralBasis& basis,
                             const ClassifierNet& net, int target, const AttackConfig& config) {
  if (target < 0 || target >= net.classes)
    throw InvalidTarget("attack target " + std::to_string(target) + " outside [0," +
                        std::to_string(net.classes) + ")");
  const PerceptualContext ctx = make_perceptual_context(mesh);
  require_closed(ctx.edges);
  const Eigen::MatrixXd& x = mesh.vertices;
  Eigen::MatrixXd lap_op;
  if (config.smoothing_weight != 0.0) {
    const MassMatrix A = mass_matrix(mesh);
    const StiffnessMatrix W = stiffness_matrix(mesh, ctx.edges);
    lap_op = config.smoothing_use_mass_inverse ? laplacian_operator(A, W) : W.to_dense();
  }

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(basis.bandwidth(), 3);
  Adam opt({&v}, config.lr);

  AttackResult result;
  result.target = target;
  result.c_used = config.c;

  int hinge_zero_streak = 0;
  double prev_recon = std::numeric_limits<double>::infinity();

  auto evaluate = [&](bool with_grad, Eigen::MatrixXd* grad_out) {
    ad::Tape tape;
    const int vc = tape.input(v, with_grad);
    const int phi = tape.input(basis.eigenvectors);
    const int delta = tape.matmul(phi, vc);
    const int xp = tape.add(tape.input(x), delta);
    const int recon = tape_reconstruction_loss(tape, config.recon, ctx, x, xp);
    int objective = recon;
    double smooth_val = 0.0;
    if (config.smoothing_weight != 0.0) {
      const int smooth = tape_laplacian_smoothing(tape, lap_op, delta);
      smooth_val = tape.value(smooth)(0, 0);
      objective = tape.add(objective, tape.scale(smooth, config.smoothing_weight));
    }
    ForwardOptions fo;
    fo.center_input = config.center_inputs;
    const TapedClassifier tc = classifier_forward(tape, net, xp, fo);
    const int hinge = tape_margin_loss(tape, tc.logits, target);
    objective = tape.add(objective, tape.scale(hinge, config.c));
    const double hinge_val = tape.value(hinge)(0, 0);
    const double recon_val = tape.value(recon)(0, 0);
    const int predicted = argmax_lowest(tape.value(tc.logits).row(0).transpose());
    if (with_grad) {
      tape.backward(objective);
      *grad_out = tape.grad(vc);
    }
    result.x_prime = tape.value(xp);
    result.predicted = predicted;
    // Reporting convention: total = mis + c_recon * recon + sw * smooth with
    // c_recon = 1/c, a positive rescale of the optimized objective.
    result.loss = LossBreakdown::make(hinge_val, recon_val, smooth_val, 1.0 / config.c,
                                      config.smoothing_weight / config.c);
    return std::pair<double, double>(hinge_val, recon_val);
  };

  // The zero perturbation may already land on the target.
  {
    auto [hinge0, recon0] = evaluate(false, nullptr);
    (void)recon0;
    if (hinge0 == 0.0 && result.predicted == target) {
      result.coefficients = v;
      result.field = result.x_prime - x;
      result.success = true;
      return result;
    }
  }

  for (int iter = 0; iter < config.max_iters; ++iter) {
    Eigen::MatrixXd grad;
    auto [hinge_val, recon_val] = evaluate(true, &grad);
    if (hinge_val == 0.0 && result.predicted == target) {
      ++hinge_zero_streak;
      if (hinge_zero_streak >= config.hinge_patience &&
          std::abs(prev_recon - recon_val) < config.recon_improve_tol) {
        result.iterations = iter;
        break;
      }
    } else {
      hinge_zero_streak = 0;
    }
    prev_recon = recon_val;
    opt.step({grad});
    result.iterations = iter + 1;
  }

  evaluate(false, nullptr);
  result.coefficients = v;
  result.field = result.x_prime - x;
  result.success = result.predicted == target;
  return result;
}

AttackResult c_search(const std::function<AttackResult(double)>& runner,
                      const CSearchConfig& config) {
  if (config.c0 <= 0.0 || config.growth <= 1.0)
    throw ConfigError("c_search requires c0 > 0 and growth > 1");
  double lo = 0.0;
  double c = config.c0;
  std::optional<AttackResult> best;
  double hi = 0.0;
  for (int round = 0; round < config.max_rounds; ++round) {
    AttackResult r = runner(c);
    if (r.success) {
      best = std::move(r);
      hi = c;
      break;
    }
    lo = c;
    c *= config.growth;
  }
  if (!best) throw NoAttackFound("c_search: no success after " +
                                 std::to_string(config.max_rounds) + " doublings from c0=" +
                                 std::to_string(config.c0));
  for (int step = 0; step < config.bisection_steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    AttackResult r = runner(mid);
    if (r.success) {
      best = std::move(r);
      hi = mid;
    } else {
      lo = mid;
    }
  }
  best->c_used = hi;
  return *std::move(best);
}

GeneratorNet GeneratorNet::init(GeneratorVariant variant, long k, Rng& rng) {
  GeneratorNet gen;
  gen.variant = variant;
  gen.k = k;
  const std::vector<long> trunk_widths = {3, 64, 64, 128, 1024};
  for (std::size_t i = 0; i + 1 < trunk_widths.size(); ++i)
    gen.trunk.push_back(init_linear(trunk_widths[i], trunk_widths[i + 1], rng));
  const long head_in = variant == GeneratorVariant::Model1 ? 1024 : 64 + 1024;
  const long head_out = variant == GeneratorVariant::Model1 ? 3 * k : 3;
  gen.head.push_back(init_linear(head_in, 512, rng));
  gen.head.push_back(init_linear(512, 256, rng));
  gen.head.push_back(init_linear(256, head_out, rng));
  // Zero the final layer so training starts from the identity perturbation.
  gen.head.back().W.setZero();
  gen.head.back().b.setZero();
  return gen;
}

std::vector<Eigen::MatrixXd*> GeneratorNet::parameters() {
  std::vector<Eigen::MatrixXd*> out;
  for (auto& l : trunk) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  for (auto& l : head) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Eigen::MatrixXd*> GeneratorNet::parameters() const {
  std::vector<const Eigen::MatrixXd*> out;
  for (const auto& l : trunk) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  for (const auto& l : head) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

TapedGenerator generator_forward(ad::Tape& tape, const GeneratorNet& gen, int points,
                                 const SpectralBasis* basis, bool train_weights) {
  TapedGenerator tg;
  auto linear = [&](int in, const Linear& layer) {
    const int w = tape.input(layer.W, train_weights);
    const int b = tape.input(layer.b, train_weights);
    tg.param_ids.push_back(w);
    tg.param_ids.push_back(b);
    const long rows = tape.value(in).rows();
    return tape.add(tape.matmul(in, w), tape.broadcast_rows(b, rows));
  };
  int xfeat = points;
  int local64 = -1;
  for (std::size_t i = 0; i < gen.trunk.size(); ++i) {
    xfeat = tape.relu(linear(xfeat, gen.trunk[i]));
    if (i == 1) local64 = xfeat;
  }
  const int global = tape.max_over_axis(xfeat, 0);  // 1 x 1024
  const long n = tape.value(points).rows();
  if (gen.variant == GeneratorVariant::Model1) {
    if (basis == nullptr) throw ShapeMismatch("model1 generator requires a spectral basis");
    if (basis->bandwidth() != gen.k)
      throw ShapeMismatch("basis bandwidth " + std::to_string(basis->bandwidth()) +
                          " != generator k " + std::to_string(gen.k));
    int h = global;
    h = tape.relu(linear(h, gen.head[0]));
    h = tape.relu(linear(h, gen.head[1]));
    h = linear(h, gen.head[2]);  // 1 x 3k
    tg.coefficients = tape.reshape(h, gen.k, 3);
    const int phi = tape.input(basis->eigenvectors);
    tg.perturbation = tape.matmul(phi, tg.coefficients);
  } else {
    int h = tape.concat_cols(local64, tape.broadcast_rows(global, n));
    h = tape.relu(linear(h, gen.head[0]));
    h = tape.relu(linear(h, gen.head[1]));
    tg.perturbation = linear(h, gen.head[2]);  // n x 3
  }
  tg.x_prime = tape.add(points, tg.perturbation);
  return tg;
}

Eigen::MatrixXd generator_apply(const GeneratorNet& gen, const Eigen::MatrixXd& x,
                                const SpectralBasis* basis, Eigen::MatrixXd* coefficients,
                                Eigen::MatrixXd* field) {
  Eigen::MatrixXd feat = x;
  Eigen::MatrixXd local64;
  for (std::size_t i = 0; i < gen.trunk.size(); ++i) {
    feat = ((feat * gen.trunk[i].W).rowwise() + gen.trunk[i].b.row(0)).cwiseMax(0.0);
    if (i == 1) local64 = feat;
  }
  const Eigen::MatrixXd global = feat.colwise().maxCoeff();
  Eigen::MatrixXd perturbation;
  if (gen.variant == GeneratorVariant::Model1) {
    if (basis == nullptr) throw ShapeMismatch("model1 generator requires a spectral basis");
    Eigen::MatrixXd h = global;
    h = ((h * gen.head[0].W).rowwise() + gen.head[0].b.row(0)).cwiseMax(0.0);
    h = ((h * gen.head[1].W).rowwise() + gen.head[1].b.row(0)).cwiseMax(0.0);
    h = (h * gen.head[2].W).rowwise() + gen.head[2].b.row(0);  // 1 x 3k
    Eigen::MatrixXd coeffs(gen.k, 3);
    for (long i = 0; i < h.size(); ++i) coeffs(i / 3, i % 3) = h(0, i);
    if (coefficients != nullptr) *coefficients = coeffs;
    perturbation = basis->eigenvectors * coeffs;
  } else {
    Eigen::MatrixXd h(x.rows(), local64.cols() + global.cols());
    h << local64, global.replicate(x.rows(), 1);
    h = ((h * gen.head[0].W).rowwise() + gen.head[0].b.row(0)).cwiseMax(0.0);
    h = ((h * gen.head[1].W).rowwise() + gen.head[1].b.row(0)).cwiseMax(0.0);
    perturbation = (h * gen.head[2].W).rowwise() + gen.head[2].b.row(0);
  }
  if (field != nullptr) *field = perturbation;
  return x + perturbation;
}

std::vector<AttackSample> prepare_attack_samples(const std::vector<LabeledMesh>& data, long k,
                                                 const std::string& basis_cache_dir) {
  std::vector<AttackSample> samples(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    AttackSample& s = samples[i];
    NormalizationRecord rec;
    s.mesh = normalize(data[i].mesh, rec);
    s.label = data[i].label;
    s.split = data[i].split;
    s.context = make_perceptual_context(s.mesh);
    require_closed(s.context.edges);
    s.mass = mass_matrix(s.mesh);
    s.stiffness = stiffness_matrix(s.mesh, s.context.edges);
    s.basis = cached_eigenbasis(s.mesh, k, basis_cache_dir);
  }
  return samples;
}

GeneratorTrainResult train_generator(GeneratorNet& gen, const std::vector<AttackSample>& samples,
                                     const ClassifierNet& classifier,
                                     const GeneratorTrainConfig& config) {
  auto params = gen.parameters();
  Adam opt(params, config.lr);
  if (!config.resume_path.empty()) {
    std::vector<char> blob;
    GeneratorNet loaded = load_generator(config.resume_path, &blob);
    if (loaded.variant != gen.variant || loaded.k != gen.k)
      throw IoError("resume checkpoint variant/k mismatch");
    gen = std::move(loaded);
    params = gen.parameters();
    opt = Adam(params, config.lr);
    if (!blob.empty()) {
      std::istringstream in(std::string(blob.begin(), blob.end()));
      opt.load_state(in);
    }
  }

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == Split::Train) train_idx.push_back(i);
    if (samples[i].split == Split::Val) val_idx.push_back(i);
  }
  if (train_idx.empty()) throw EmptySplit("generator training requires a train split");

  const int classes = classifier.classes;
  Rng rng(config.seed ^ 0x6e6e7200ULL);
  GeneratorTrainResult result;

  auto target_of = [&](int label) {
    return config.target_offset < 0 ? -1 : (label + config.target_offset) % classes;
  };

  // Plain-evaluation metrics for a sample set.
  auto eval_split = [&](const std::vector<std::size_t>& idx, double stats[5]) {
    double mis = 0, hit = 0, recon = 0, total = 0, misloss = 0;
    for (std::size_t i : idx) {
      const AttackSample& s = samples[i];
      const Eigen::MatrixXd xp = generator_apply(gen, s.mesh.vertices, &s.basis);
      const Eigen::VectorXd z = forward_logits(classifier, xp, config.center_inputs);
      const int pred = argmax_lowest(z);
      const int t = target_of(s.label);
      const double ml =
          t < 0 ? untargeted_margin_loss(z, s.label) : margin_loss(z, t);
      const double rc = reconstruction_loss(config.recon, s.context, s.mesh.vertices, xp);
      double sm = 0.0;
      if (config.smoothing_weight != 0.0)
        sm = laplacian_smoothing(s.mass, s.stiffness, xp - s.mesh.vertices,
                                 config.smoothing_use_mass_inverse);
      mis += pred != s.label ? 1.0 : 0.0;
      hit += (t >= 0 && pred == t) ? 1.0 : 0.0;
      recon += rc;
      misloss += ml;
      total += ml + config.c * rc + config.smoothing_weight * sm;
    }
    const double n = static_cast<double>(idx.size());
    stats[0] = 100.0 * mis / n;
    stats[1] = 100.0 * hit / n;
    stats[2] = recon / n;
    stats[3] = total / n;
    stats[4] = misloss / n;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i > 1; --i)
      std::swap(train_idx[i - 1], train_idx[rng.uniform_int(i)]);
    double tr_mis = 0, tr_hit = 0, tr_recon = 0, tr_total = 0, tr_misloss = 0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop =
          std::min(train_idx.size(), start + static_cast<std::size_t>(config.batch));
      const long bs = static_cast<long>(stop - start);
      std::vector<std::vector<Eigen::MatrixXd>> sample_grads(bs);
      std::vector<double> s_mis(bs), s_hit(bs), s_recon(bs), s_total(bs), s_misloss(bs);
      bool diverged = false;
#pragma omp parallel for schedule(dynamic)
      for (long b = 0; b < bs; ++b) {
        const AttackSample& s = samples[train_idx[start + static_cast<std::size_t>(b)]];
        try {
          ad::Tape tape;
          const int xid = tape.input(s.mesh.vertices);
          const TapedGenerator tg = generator_forward(
              tape, gen, xid, gen.variant == GeneratorVariant::Model1 ? &s.basis : nullptr,
              true);
          ForwardOptions fo;
          fo.center_input = config.center_inputs;
          const TapedClassifier tc = classifier_forward(tape, classifier, tg.x_prime, fo);
          const int t = target_of(s.label);
          const int misnode = t < 0 ? tape_untargeted_margin_loss(tape, tc.logits, s.label)
                                    : tape_margin_loss(tape, tc.logits, t);
          int total = misnode;
          const int recon =
              tape_reconstruction_loss(tape, config.recon, s.context, s.mesh.vertices, tg.x_prime);
          total = tape.add(total, tape.scale(recon, config.c));
          double smooth_val = 0.0;
          if (config.smoothing_weight != 0.0) {
            const Eigen::MatrixXd lap_op = config.smoothing_use_mass_inverse
                                               ? laplacian_operator(s.mass, s.stiffness)
                                               : s.stiffness.to_dense();
            const int smooth = tape_laplacian_smoothing(tape, lap_op, tg.perturbation);
            smooth_val = tape.value(smooth)(0, 0);
            total = tape.add(total, tape.scale(smooth, config.smoothing_weight));
          }
          tape.backward(total);
          const int pred = argmax_lowest(tape.value(tc.logits).row(0).transpose());
          s_mis[static_cast<std::size_t>(b)] = pred != s.label ? 1.0 : 0.0;
          s_hit[static_cast<std::size_t>(b)] = (t >= 0 && pred == t) ? 1.0 : 0.0;
          s_recon[static_cast<std::size_t>(b)] = tape.value(recon)(0, 0);
          s_misloss[static_cast<std::size_t>(b)] = tape.value(misnode)(0, 0);
          s_total[static_cast<std::size_t>(b)] = tape.value(misnode)(0, 0) +
                                                 config.c * tape.value(recon)(0, 0) +
                                                 config.smoothing_weight * smooth_val;
          auto& g = sample_grads[static_cast<std::size_t>(b)];
          g.reserve(tg.param_ids.size());
          for (int id : tg.param_ids) g.push_back(tape.grad(id));
        } catch (const NonFiniteValue&) {
#pragma omp critical
          diverged = true;
        }
      }
      if (diverged) throw DivergenceError("generator training produced non-finite values");
      std::vector<Eigen::MatrixXd> grads;
      grads.reserve(params.size());
      for (std::size_t p = 0; p < params.size(); ++p)
        grads.push_back(Eigen::MatrixXd::Zero(params[p]->rows(), params[p]->cols()));
      for (long b = 0; b < bs; ++b) {
        for (std::size_t p = 0; p < params.size(); ++p)
          grads[p] += sample_grads[static_cast<std::size_t>(b)][p];
        tr_mis += s_mis[static_cast<std::size_t>(b)];
        tr_hit += s_hit[static_cast<std::size_t>(b)];
        tr_recon += s_recon[static_cast<std::size_t>(b)];
        tr_total += s_total[static_cast<std::size_t>(b)];
        tr_misloss += s_misloss[static_cast<std::size_t>(b)];
      }
      for (auto& g : grads) g /= static_cast<double>(bs);
      opt.step(grads);
    }
    GeneratorEpochStats stats;
    stats.epoch = epoch;
    const double nt = static_cast<double>(train_idx.size());
    stats.train_misclass_pct = 100.0 * tr_mis / nt;
    stats.train_target_hit_pct = 100.0 * tr_hit / nt;
    stats.train_recon = tr_recon / nt;
    stats.train_total = tr_total / nt;
    stats.train_misclass_loss = tr_misloss / nt;
    if (!val_idx.empty()) {
      double vs[5];
      eval_split(val_idx, vs);
      stats.val_misclass_pct = vs[0];
      stats.val_target_hit_pct = vs[1];
      stats.val_recon = vs[2];
      stats.val_total = vs[3];
      stats.val_misclass_loss = vs[4];
    }
    result.epochs.push_back(stats);
  }
  return result;
}

void save_generator(const GeneratorNet& gen, const std::string& path, const Adam* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kGeneratorMagic, sizeof(kGeneratorMagic));
  const std::uint32_t variant = gen.variant == GeneratorVariant::Model1 ? 1 : 2;
  const std::uint64_t k = static_cast<std::uint64_t>(gen.k);
  const std::uint32_t nt = static_cast<std::uint32_t>(gen.trunk.size());
  const std::uint32_t nh = static_cast<std::uint32_t>(gen.head.size());
  out.write(reinterpret_cast<const char*>(&variant), sizeof(variant));
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  out.write(reinterpret_cast<const char*>(&nt), sizeof(nt));
  out.write(reinterpret_cast<const char*>(&nh), sizeof(nh));
  for (const auto* p : gen.parameters()) write_matrix(out, *p);
  std::string blob;
  if (optimizer != nullptr) {
    std::ostringstream ss;
    optimizer->save_state(ss);
    blob = ss.str();
  }
  const std::uint64_t blob_size = blob.size();
  out.write(reinterpret_cast<const char*>(&blob_size), sizeof(blob_size));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("write failed: " + path);
}

GeneratorNet load_generator(const std::string& path, std::vector<char>* optimizer_blob) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[sizeof(kGeneratorMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGeneratorMagic, sizeof(magic)) != 0)
    throw IoError("bad generator checkpoint header: " + path);
  std::uint32_t variant = 0, nt = 0, nh = 0;
  std::uint64_t k = 0;
  in.read(reinterpret_cast<char*>(&variant), sizeof(variant));
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  in.read(reinterpret_cast<char*>(&nt), sizeof(nt));
  in.read(reinterpret_cast<char*>(&nh), sizeof(nh));
  GeneratorNet gen;
  gen.variant = variant == 1 ? GeneratorVariant::Model1 : GeneratorVariant::Model2;
  gen.k = static_cast<long>(k);
  gen.trunk.resize(nt);
  gen.head.resize(nh);
  for (auto& l : gen.trunk) {
    l.W = read_matrix(in);
    l.b = read_matrix(in);
  }
  for (auto& l : gen.head) {
    l.W = read_matrix(in);
    l.b = read_matrix(in);
  }
  std::uint64_t blob_size = 0;
  in.read(reinterpret_cast<char*>(&blob_size), sizeof(blob_size));
  if (optimizer_blob != nullptr) {
    optimizer_blob->resize(blob_size);
    if (blob_size > 0)
      in.read(optimizer_blob->data(), static_cast<std::streamsize>(blob_size));
  }
  if (!in) throw IoError("truncated generator checkpoint: " + path);
  return gen;
}

double spike_score(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp) {
  Eigen::VectorXd d = (xp - x).rowwise().norm();
  if (d.maxCoeff() == 0.0) return 0.0;
  std::vector<double> sorted(d.data(), d.data() + d.size());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (median <= 0.0) return std::numeric_limits<double>::infinity();
  return d.maxCoeff() / median;
}

std::vector<SplitMetrics> evaluate_attacks(const std::vector<AttackResult>& results,
                                           const std::vector<const AttackSample*>& sources) {
  if (results.size() != sources.size())
    throw DimensionMismatch("evaluate_attacks: result/source count mismatch");
  if (results.empty()) throw EmptySplit("evaluate_attacks: no results");
  std::vector<SplitMetrics> rows;
  for (Split split : {Split::Train, Split::Val, Split::Test}) {
    SplitMetrics m;
    m.split = split;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (sources[i]->split != split) continue;
      ++m.count;
      m.curvature_distortion +=
          curvature_distortion(sources[i]->mesh, results[i].x_prime);
      m.edge_loss += edge_loss(sources[i]->context, results[i].x_prime);
      m.l2 += l2_loss(sources[i]->mesh.vertices, results[i].x_prime);
      m.misclass_rate += results[i].predicted != sources[i]->label ? 1.0 : 0.0;
    }
    if (m.count > 0) {
      const double n = static_cast<double>(m.count);
      m.curvature_distortion /= n;
      m.edge_loss /= n;
      m.l2 /= n;
      m.misclass_rate /= n;
      rows.push_back(m);
    }
  }
  return rows;
}

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_generator_epochs_csv(const GeneratorTrainResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "epoch,split,misclass_pct,recon_loss,total_loss\n";
  for (const auto& e : result.epochs) {
    out << e.epoch << ",train," << fmt_g(e.train_misclass_pct) << "," << fmt_g(e.train_recon)
        << "," << fmt_g(e.train_total) << "\n";
    out << e.epoch << ",val," << fmt_g(e.val_misclass_pct) << "," << fmt_g(e.val_recon) << ","
        << fmt_g(e.val_total) << "\n";
  }
}

void write_metrics_csv(const std::vector<SplitMetrics>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "split,count,curvature_distortion,edge_loss,l2,misclass_rate\n";
  for (const auto& m : rows)
    out << split_name(m.split) << "," << m.count << "," << fmt_g(m.curvature_distortion) << ","
        << fmt_g(m.edge_loss) << "," << fmt_g(m.l2) << "," << fmt_g(m.misclass_rate) << "\n";
}

}  // namespace meshadv

// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
#include "meshadv/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "meshadv/error.hpp"

namespace meshadv {

namespace {
constexpr char kCheckpointMagic[8] = {'M', 'A', 'C', 'K', '0', '1', 0, 0};

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

double stable_cross_entropy(const Eigen::VectorXd& logits, int label) {
  const double m = logits.maxCoeff();
  return std::log((logits.array() - m).exp().sum()) + m - logits(label);
}

}  // namespace

Linear init_linear(long in, long out, Rng& rng) {
  Linear l;
  l.W.resize(in, out);
  const double s = std::sqrt(2.0 / static_cast<double>(in));
  for (long r = 0; r < in; ++r)
    for (long c = 0; c < out; ++c) l.W(r, c) = s * rng.normal();
  l.b = Eigen::MatrixXd::Zero(1, out);
  return l;
}

ClassifierNet ClassifierNet::init(int classes, Rng& rng, const std::vector<long>& point_widths,
                                  const std::vector<long>& head_widths) {
  ClassifierNet net;
  net.classes = classes;
  for (std::size_t i = 0; i + 1 < point_widths.size(); ++i)
    net.point_layers.push_back(init_linear(point_widths[i], point_widths[i + 1], rng));
  std::vector<long> hw = head_widths;
  hw.push_back(classes);
  for (std::size_t i = 0; i + 1 < hw.size(); ++i)
    net.head_layers.push_back(init_linear(hw[i], hw[i + 1], rng));
  return net;
}

std::vector<Eigen::MatrixXd*> ClassifierNet::parameters() {
  std::vector<Eigen::MatrixXd*> out;
  for (auto& l : point_layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  for (auto& l : head_layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Eigen::MatrixXd*> ClassifierNet::parameters() const {
  std::vector<const Eigen::MatrixXd*> out;
  for (const auto& l : point_layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  for (const auto& l : head_layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

TapedClassifier classifier_forward(ad::Tape& tape, const ClassifierNet& net, int points,
                                   const ForwardOptions& opts) {
  TapedClassifier tc;
  int x = points;
  if (opts.center_input) {
    const long n = tape.value(points).rows();
    x = tape.sub(x, tape.broadcast_rows(tape.mean_rows(x), n));
  }
  auto linear = [&](int in, const Linear& layer) {
    const int w = tape.input(layer.W, opts.train_weights);
    const int b = tape.input(layer.b, opts.train_weights);
    tc.param_ids.push_back(w);
    tc.param_ids.push_back(b);
    const long rows = tape.value(in).rows();
    return tape.add(tape.matmul(in, w), tape.broadcast_rows(b, rows));
  };
  for (const auto& layer : net.point_layers) x = tape.relu(linear(x, layer));
  int g = tape.max_over_axis(x, 0);  // 1 x 1024 global feature
  const std::size_t last = net.head_layers.size() - 1;
  for (std::size_t i = 0; i < net.head_layers.size(); ++i) {
    g = linear(g, net.head_layers[i]);
    if (i != last) {
      g = tape.relu(g);
      if (opts.dropout > 0.0) {
        if (opts.dropout_rng == nullptr)
          throw Error("classifier_forward: dropout requires an rng");
        Eigen::MatrixXd mask(1, tape.value(g).cols());
        const double keep = 1.0 - opts.dropout;
        for (long c = 0; c < mask.cols(); ++c)
          mask(0, c) = opts.dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        g = tape.mul(g, tape.input(mask));
      }
    }
  }
  tc.logits = g;
  return tc;
}

Eigen::VectorXd forward_logits(const ClassifierNet& net, const Eigen::MatrixXd& points,
                               bool center_input) {
  if (points.rows() < 1 || points.cols() != 3)
    throw ShapeMismatch("forward_logits: points must be n x 3 with n >= 1");
  if (!points.allFinite()) throw NonFiniteValue("forward_logits: non-finite input");
  Eigen::MatrixXd x = points;
  if (center_input) x.rowwise() -= x.colwise().mean();
  // The per-point layers accumulate rank-1 updates in a fixed k order so that
  // every row's value is a function of that row alone. A blocked GEMM would
  // tie a row's rounding to its position in the matrix (the remainder rows of
  // the microkernel sum in a different order) and break the exact permutation
  // invariance of the forward pass. Rows are still processed in blocks so the
  // weight matrix streams through cache once per block, not once per point.
  constexpr long kRowBlock = 64;
  for (const auto& layer : net.point_layers) {
    const long n = x.rows();
    const long d_in = layer.W.rows();
    const long d_out = layer.W.cols();
    Eigen::MatrixXd out(n, d_out);
    for (long r0 = 0; r0 < n; r0 += kRowBlock) {
      const long b = std::min(kRowBlock, n - r0);
      auto block = out.middleRows(r0, b);
      block = layer.b.row(0).replicate(b, 1);
      for (long k = 0; k < d_in; ++k)
        block.noalias() += x.middleRows(r0, b).col(k) * layer.W.row(k);
      block = block.cwiseMax(0.0);
    }
    x = std::move(out);
  }
  // Column-wise max; Eigen's colwise().maxCoeff() takes the first of equal
  // values, matching the tape's lowest-index tie rule.
  Eigen::MatrixXd g = x.colwise().maxCoeff();
  const std::size_t last = net.head_layers.size() - 1;
  for (std::size_t i = 0; i < net.head_layers.size(); ++i) {
    g = (g * net.head_layers[i].W).rowwise() + net.head_layers[i].b.row(0);
    if (i != last) g = g.cwiseMax(0.0);
  }
  if (!g.allFinite()) throw NonFiniteValue("forward_logits: non-finite logits");
  return g.row(0).transpose();
}

int argmax_lowest(const Eigen::VectorXd& logits) {
  int best = 0;
  for (long i = 1; i < logits.size(); ++i)
    if (logits(i) > logits(best)) best = static_cast<int>(i);
  return best;
}

int predict(const ClassifierNet& net, const Eigen::MatrixXd& points, bool center_input) {
  return argmax_lowest(forward_logits(net, points, center_input));
}

Eigen::MatrixXd augment(const Eigen::MatrixXd& points, Rng& rng, bool full_so3) {
  Eigen::Matrix3d rot;
  if (full_so3) {
    // Uniform rotation from a normalized random quaternion.
    Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    rot << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  } else {
    const double a = rng.uniform(0.0, 2.0 * M_PI);
    const double c = std::cos(a), s = std::sin(a);
    rot << c, -s, 0, s, c, 0, 0, 0, 1;
  }
  Eigen::RowVector3d shift(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                           rng.uniform(-0.1, 0.1));
  return ((points * rot.transpose()).rowwise() + shift).eval();
}

int tape_cross_entropy(ad::Tape& tape, int logits, int label) {
  const long c = tape.value(logits).cols();
  if (label < 0 || label >= c) throw InvalidTarget("cross_entropy: label out of range");
  const double m = tape.value(logits).maxCoeff();
  const int shifted = tape.sub(logits, tape.input(Eigen::MatrixXd::Constant(1, c, m)));
  const int lse = tape.log_eps(tape.sum(tape.exp(shifted)));
  const int with_m = tape.add(lse, tape.input(Eigen::MatrixXd::Constant(1, 1, m)));
  return tape.sub(with_m, tape.slice_cols(logits, label, 1));
}

Adam::Adam(std::vector<Eigen::MatrixXd*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
}

void Adam::step(const std::vector<Eigen::MatrixXd>& grads) {
  if (grads.size() != params_.size()) throw DimensionMismatch("adam: gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    params_[i]->array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

void Adam::save_state(std::ostream& out) const {
  const std::uint64_t t = static_cast<std::uint64_t>(t_);
  const std::uint64_t count = m_.size();
  out.write(reinterpret_cast<const char*>(&t), sizeof(t));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    write_matrix(out, m_[i]);
    write_matrix(out, v_[i]);
  }
}

void Adam::load_state(std::istream& in) {
  std::uint64_t t = 0, count = 0;
  in.read(reinterpret_cast<char*>(&t), sizeof(t));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != m_.size()) throw IoError("adam state: parameter count mismatch");
  t_ = static_cast<long>(t);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = read_matrix(in);
    v_[i] = read_matrix(in);
  }
}

void TrainReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char buf[160];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n", e.epoch, e.train_loss,
                  e.train_acc, e.val_loss, e.val_acc);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "test_accuracy,%.12g\n", test_accuracy);
  out << buf;
}

std::pair<double, double> evaluate_classifier(const ClassifierNet& net,
                                              const std::vector<TrainSample>& samples,
                                              bool center_inputs) {
  double loss = 0.0;
  long correct = 0;
  for (const auto& s : samples) {
    const Eigen::VectorXd z = forward_logits(net, s.points, center_inputs);
    loss += stable_cross_entropy(z, s.label);
    if (argmax_lowest(z) == s.label) ++correct;
  }
  const double n = static_cast<double>(samples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

TrainedClassifier train_classifier(const std::vector<TrainSample>& train,
                                   const std::vector<TrainSample>& val,
                                   const std::vector<TrainSample>& test,
                                   const ClassifierTrainConfig& config) {
  Rng rng(config.seed ^ 0x5eed0001ULL);
  ClassifierNet net = ClassifierNet::init(config.classes, rng);
  auto params = net.parameters();
  Adam opt(params, config.lr);
  TrainReport report;
  report.seed = config.seed;
  report.augmented = config.augment;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  int streak = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Deterministic shuffle.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    double epoch_loss = 0.0;
    long epoch_correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t stop = std::min(order.size(), start + config.batch);
      const long bs = static_cast<long>(stop - start);
      // Per-sample seeds are drawn serially so the parallel section stays
      // bitwise reproducible.
      std::vector<std::uint64_t> seeds(bs);
      for (long i = 0; i < bs; ++i) seeds[static_cast<std::size_t>(i)] = rng.next_u64();
      std::vector<std::vector<Eigen::MatrixXd>> sample_grads(bs);
      std::vector<double> sample_loss(bs, 0.0);
      std::vector<int> sample_hit(bs, 0);
      bool diverged = false;
#pragma omp parallel for schedule(dynamic)
      for (long i = 0; i < bs; ++i) {
        const TrainSample& s = train[order[start + static_cast<std::size_t>(i)]];
        Rng srng(seeds[static_cast<std::size_t>(i)]);
        try {
          Eigen::MatrixXd pts =
              config.augment ? meshadv::augment(s.points, srng, config.full_so3) : s.points;
          ad::Tape tape;
          ForwardOptions fo;
          fo.train_weights = true;
          fo.dropout = config.dropout;
          fo.dropout_rng = &srng;
          fo.center_input = config.center_inputs;
          const int pid = tape.input(pts);
          TapedClassifier tc = classifier_forward(tape, net, pid, fo);
          const int ce = tape_cross_entropy(tape, tc.logits, s.label);
          tape.backward(ce);
          sample_loss[static_cast<std::size_t>(i)] = tape.value(ce)(0, 0);
          sample_hit[static_cast<std::size_t>(i)] =
              argmax_lowest(tape.value(tc.logits).row(0).transpose()) == s.label ? 1 : 0;
          auto& g = sample_grads[static_cast<std::size_t>(i)];
          g.reserve(tc.param_ids.size());
          for (int id : tc.param_ids) g.push_back(tape.grad(id));
        } catch (const NonFiniteValue&) {
#pragma omp critical
          diverged = true;
        }
      }
      if (diverged) throw DivergenceError("classifier training produced non-finite values");
      std::vector<Eigen::MatrixXd> grads;
      grads.reserve(params.size());
      for (std::size_t p = 0; p < params.size(); ++p)
        grads.push_back(Eigen::MatrixXd::Zero(params[p]->rows(), params[p]->cols()));
      for (long i = 0; i < bs; ++i) {
        for (std::size_t p = 0; p < params.size(); ++p)
          grads[p] += sample_grads[static_cast<std::size_t>(i)][p];
        epoch_loss += sample_loss[static_cast<std::size_t>(i)];
        epoch_correct += sample_hit[static_cast<std::size_t>(i)];
      }
      for (auto& g : grads) g /= static_cast<double>(bs);
      opt.step(grads);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(train.size());
    stats.train_acc = static_cast<double>(epoch_correct) / static_cast<double>(train.size());
    if (!val.empty()) {
      auto [vl, va] = evaluate_classifier(net, val, config.center_inputs);
      stats.val_loss = vl;
      stats.val_acc = va;
    }
    report.epochs.push_back(stats);
    if (config.early_stop_val_acc > 0.0 && !val.empty()) {
      streak = stats.val_acc >= config.early_stop_val_acc ? streak + 1 : 0;
      if (streak >= 3) break;
    }
  }
  if (!test.empty())
    report.test_accuracy = evaluate_classifier(net, test, config.center_inputs).second;
  return {std::move(net), std::move(report)};
}

void save_classifier(const ClassifierNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t classes = static_cast<std::uint32_t>(net.classes);
  const std::uint32_t np = static_cast<std::uint32_t>(net.point_layers.size());
  const std::uint32_t nh = static_cast<std::uint32_t>(net.head_layers.size());
  out.write(reinterpret_cast<const char*>(&classes), sizeof(classes));
  out.write(reinterpret_cast<const char*>(&np), sizeof(np));
  out.write(reinterpret_cast<const char*>(&nh), sizeof(nh));
  for (const auto* p : net.parameters()) write_matrix(out, *p);
  if (!out) throw IoError("write failed: " + path);
}

ClassifierNet load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw IoError("bad classifier checkpoint header: " + path);
  std::uint32_t classes = 0, np = 0, nh = 0;
  in.read(reinterpret_cast<char*>(&classes), sizeof(classes));
  in.read(reinterpret_cast<char*>(&np), sizeof(np));
  in.read(reinterpret_cast<char*>(&nh), sizeof(nh));
  ClassifierNet net;
  net.classes = static_cast<int>(classes);
  net.point_layers.resize(np);
  net.head_layers.resize(nh);
  for (auto& l : net.point_layers) {
    l.W = read_matrix(in);
    l.b = read_matrix(in);
  }
  for (auto& l : net.head_layers) {
    l.W = read_matrix(in);
    l.b = read_matrix(in);
  }
  if (!in) throw IoError("truncated classifier checkpoint: " + path);
  return net;
}

}  // namespace meshadv

#pragma once

// Mini-batch SGD training loop.
//
// Each epoch draws a fresh permutation of the training windows and splits it
// into a FIXED NUMBER of minibatches (sizes differ by at most one), so the
// minibatch count - not the batch size - is the invariant. Weight decay is
// applied inside the update, w' = w - lr * (g + wd * w), to every learnable
// tensor. The learning rate drops by lr_drop_factor after lr_drop_epoch
// epochs.

#include "semg/common.hpp"
#include "semg/network.hpp"
#include "semg/rng.hpp"
#include "semg/windowing.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace semg {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lr = 1e-3;
  int n_minibatches = 50;
  int epochs = 20;
  int lr_drop_epoch = 19;      // epochs beyond this index use lr * lr_drop_factor
  double lr_drop_factor = 0.1;
  double weight_decay = 0.1;
  std::uint64_t seed = 0;
  // Validation cadence: every val_every-th epoch (plus the last); 0 = last
  // epoch only. Skipped epochs record NaN.
  int val_every = 1;
};

inline void validate(const TrainConfig& c) {
  if (c.lr <= 0) throw ValidationError("TrainConfig.lr must be positive");
  if (c.n_minibatches < 1) throw ValidationError("TrainConfig.n_minibatches must be >= 1");
  if (c.epochs < 1) throw ValidationError("TrainConfig.epochs must be >= 1");
  if (c.lr_drop_epoch < 0) throw ValidationError("TrainConfig.lr_drop_epoch must be >= 0");
  if (c.lr_drop_factor <= 0) throw ValidationError("TrainConfig.lr_drop_factor must be positive");
  if (c.weight_decay < 0) throw ValidationError("TrainConfig.weight_decay must be >= 0");
  if (c.val_every < 0) throw ValidationError("TrainConfig.val_every must be >= 0");
}

struct EpochRecord {
  int epoch = 0;
  double lr = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();      // plain CE
  double train_loss_reg = std::numeric_limits<double>::quiet_NaN();  // CE + (wd/2)*sum||w||^2
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_acc = std::numeric_limits<double>::quiet_NaN();
};

using LearningCurve = std::vector<EpochRecord>;

// Permutation of 0..n-1 cut into n_batches slices; the first n % n_batches
// slices take the extra element. Every index appears in exactly one slice.
inline std::vector<std::vector<int>> minibatch_partition(int n, int n_batches,
                                                         std::uint64_t seed) {
  if (n_batches < 1) throw ValidationError("minibatch_partition: n_batches must be >= 1");
  if (n < n_batches)
    throw ValidationError("minibatch_partition: need at least one sample per minibatch (n=" +
                          std::to_string(n) + ", batches=" + std::to_string(n_batches) + ")");
  Rng rng(seed);
  std::vector<int> perm = rng.permutation(n);
  std::vector<std::vector<int>> out(static_cast<size_t>(n_batches));
  const int base = n / n_batches;
  const int extra = n % n_batches;
  int pos = 0;
  for (int b = 0; b < n_batches; ++b) {
    const int len = base + (b < extra ? 1 : 0);
    out[static_cast<size_t>(b)].assign(perm.begin() + pos, perm.begin() + pos + len);
    pos += len;
  }
  return out;
}

// Packs windows into the network's input layout: data(c, x*N + n) holds
// channel c, position x of the n-th window in the batch.
template <typename S>
Batch<S> make_batch(const std::vector<LabeledWindow>& windows, const std::vector<int>& idx,
                    std::vector<int>* labels_out) {
  if (idx.empty()) throw ValidationError("make_batch: empty index list");
  const auto& first = windows.at(static_cast<size_t>(idx[0]));
  const int len = static_cast<int>(first.data.rows());
  const int ch = static_cast<int>(first.data.cols());
  Batch<S> b;
  b.channels = ch;
  b.length = len;
  b.batch = static_cast<int>(idx.size());
  b.data.resize(ch, static_cast<Eigen::Index>(len) * b.batch);
  if (labels_out) labels_out->resize(idx.size());
  for (int n = 0; n < b.batch; ++n) {
    const auto& w = windows.at(static_cast<size_t>(idx[static_cast<size_t>(n)]));
    if (w.data.rows() != len || w.data.cols() != ch)
      throw ValidationError("make_batch: windows have inconsistent shapes");
    for (int x = 0; x < len; ++x)
      for (int c = 0; c < ch; ++c)
        b.data(c, static_cast<Eigen::Index>(x) * b.batch + n) = static_cast<S>(w.data(x, c));
    if (labels_out) (*labels_out)[static_cast<size_t>(n)] = w.label;
  }
  return b;
}

// One decoupled-L2 SGD update: w -= lr * (g + wd * w), biases and batch-norm
// scales included. check_finite guards against silently stepping on NaNs; the
// trainer turns it off per-step and instead audits loss per step and
// parameters per epoch.
template <typename S>
void sgd_step(const std::vector<ParamTensor<S>*>& params, double lr, double weight_decay,
              bool check_finite = true) {
  if (lr <= 0) throw ValidationError("sgd_step: lr must be positive");
  if (weight_decay < 0) throw ValidationError("sgd_step: weight_decay must be >= 0");
  const S a = static_cast<S>(lr);
  const S wd = static_cast<S>(weight_decay);
  for (auto* p : params) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols())
      throw ValidationError("sgd_step: gradient shape mismatch for " + p->name);
    if (check_finite && !p->grad.allFinite())
      throw TrainingError("sgd_step: non-finite gradient in " + p->name);
    p->value.array() -= a * (p->grad.array() + wd * p->value.array());
  }
}

struct EvalMetrics {
  double loss = 0;
  double accuracy = 0;
  int n = 0;
};

template <typename S>
EvalMetrics evaluate(Network<S>& net, const std::vector<LabeledWindow>& set,
                     int batch_size = 256) {
  if (set.empty()) throw ValidationError("evaluate: empty window set");
  if (batch_size < 1) throw ValidationError("evaluate: batch_size must be >= 1");
  EvalMetrics m;
  m.n = static_cast<int>(set.size());
  double loss_sum = 0;
  int correct = 0;
  std::vector<int> idx, labels;
  for (int start = 0; start < m.n; start += batch_size) {
    const int len = std::min(batch_size, m.n - start);
    idx.resize(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) idx[static_cast<size_t>(i)] = start + i;
    Batch<S> b = make_batch<S>(set, idx, &labels);
    Batch<S> out = net.forward(b, Mode::Eval);
    loss_sum += static_cast<double>(cross_entropy(out.data, labels)) * len;
    for (int n = 0; n < len; ++n) {
      Eigen::Index arg;
      out.data.col(n).maxCoeff(&arg);
      if (static_cast<int>(arg) == labels[static_cast<size_t>(n)]) ++correct;
    }
  }
  m.loss = loss_sum / m.n;
  m.accuracy = static_cast<double>(correct) / m.n;
  return m;
}

using BatchObserver = std::function<void(int epoch, int batch, const std::vector<int>& indices)>;

template <typename S>
LearningCurve train(Network<S>& net, const std::vector<LabeledWindow>& train_set,
                    const std::vector<LabeledWindow>& val_set, const TrainConfig& cfg,
                    const BatchObserver& observer = {}) {
  validate(cfg);
  const int n = static_cast<int>(train_set.size());
  if (n < cfg.n_minibatches)
    throw ValidationError("train: fewer windows than minibatches");
  const bool has_bn = !net.state().empty();
  if (has_bn && n / cfg.n_minibatches < 2)
    throw ValidationError("train: smallest minibatch would have " +
                          std::to_string(n / cfg.n_minibatches) +
                          " sample(s); batch norm needs at least 2 per minibatch");
  net.reseed_dropout(derive_seed(cfg.seed, "dropout-stream"));
  auto params = net.params();
  LearningCurve curve;
  curve.reserve(static_cast<size_t>(cfg.epochs));
  std::vector<int> labels;
  for (int e = 1; e <= cfg.epochs; ++e) {
    EpochRecord rec;
    rec.epoch = e;
    rec.lr = (e > cfg.lr_drop_epoch) ? cfg.lr * cfg.lr_drop_factor : cfg.lr;
    const auto parts = minibatch_partition(n, cfg.n_minibatches,
                                           derive_seed(cfg.seed, "epoch-perm",
                                                       static_cast<std::uint64_t>(e)));
    double loss_sum = 0;
    for (int b = 0; b < static_cast<int>(parts.size()); ++b) {
      const auto& idx = parts[static_cast<size_t>(b)];
      Batch<S> batch = make_batch<S>(train_set, idx, &labels);
      Batch<S> out = net.forward(batch, Mode::Train);
      const double loss = static_cast<double>(cross_entropy(out.data, labels));
      if (!std::isfinite(loss))
        throw TrainingError("training diverged: non-finite loss at epoch " + std::to_string(e) +
                            ", minibatch " + std::to_string(b));
      net.backward(cross_entropy_grad(out.data, labels));
      sgd_step(params, rec.lr, cfg.weight_decay, /*check_finite=*/false);
      if (observer) observer(e, b, idx);
      loss_sum += loss * static_cast<double>(idx.size());
    }
    rec.train_loss = loss_sum / n;
    double l2 = 0;
    for (auto* p : params) {
      if (!p->value.allFinite())
        throw TrainingError("training diverged: non-finite parameter in " + p->name +
                            " after epoch " + std::to_string(e));
      l2 += static_cast<double>(p->value.template cast<double>().squaredNorm());
    }
    rec.train_loss_reg = rec.train_loss + 0.5 * cfg.weight_decay * l2;
    const bool do_val =
        !val_set.empty() &&
        (e == cfg.epochs || (cfg.val_every > 0 && e % cfg.val_every == 0));
    if (do_val) {
      const EvalMetrics vm = evaluate(net, val_set);
      rec.val_loss = vm.loss;
      rec.val_acc = vm.accuracy;
    }
    curve.push_back(rec);
  }
  return curve;
}

// CSV with header epoch,train_loss,val_loss,val_acc; NaN -> empty cell.
inline void write_curve_csv(const LearningCurve& curve, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "epoch,train_loss,val_loss,val_acc\n";
  char buf[64];
  auto cell = [&buf](double v) -> std::string {
    if (std::isnan(v)) return "";
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  };
  for (const auto& r : curve)
    os << r.epoch << ',' << cell(r.train_loss) << ',' << cell(r.val_loss) << ','
       << cell(r.val_acc) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace semg

#pragma once

// Neural-network layers with hand-derived backward passes. Everything is
// templated on the scalar type: training runs in float, gradient checking in
// double. No autodiff anywhere - backward() implements the math directly and
// the finite-difference harness keeps it honest.
//
// Data layout is the Batch<> convention from common.hpp: convolutional stage
// (channels x length*batch, position-major columns), dense stage
// (features x batch). backward() assigns parameter gradients (no
// accumulation) and returns the gradient w.r.t. the layer input.

#include "semg/common.hpp"
#include "semg/rng.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace semg {

enum class Mode { Train, Eval };

template <typename S>
struct ParamTensor {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  void init_zero(Eigen::Index rows, Eigen::Index cols) {
    value = Matrix<S>::Zero(rows, cols);
    grad = Matrix<S>::Zero(rows, cols);
  }
};

// Non-learned but checkpointed state (batch-norm running statistics).
template <typename S>
struct StateTensor {
  std::string name;
  Matrix<S> value;
};

// Deterministic row-major uniform fill in (-bound, bound).
template <typename S>
void uniform_fill(Matrix<S>& m, double bound, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = static_cast<S>(rng.uniform(-bound, bound));
}

template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual const std::string& name() const = 0;
  virtual Batch<S> forward(const Batch<S>& in, Mode mode) = 0;
  virtual Batch<S> backward(const Batch<S>& grad_out) = 0;
  virtual std::vector<ParamTensor<S>*> params() { return {}; }
  virtual std::vector<StateTensor<S>*> state() { return {}; }
};

namespace detail {
inline void check_batch_shape(int channels, Eigen::Index rows, Eigen::Index cols, int length,
                              int batch, const std::string& who) {
  if (rows != channels || cols != static_cast<Eigen::Index>(length) * batch)
    throw ValidationError(who + ": input shape does not match declared batch dimensions");
}
}  // namespace detail

// 1-d valid cross-correlation (stride 1) via im2col + one GEMM.
// Weight layout: W is out_ch x (in_ch*ksize); column k*ksize + r holds the
// tap for input channel k at offset r.
template <typename S>
class Conv1d : public Layer<S> {
 public:
  Conv1d(std::string name, int in_ch, int out_ch, int ksize, Rng& init)
      : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize) {
    if (in_ch < 1 || out_ch < 1 || ksize < 1)
      throw ValidationError(name_ + ": channel counts and kernel size must be >= 1");
    w_.name = name_ + ".weight";
    b_.name = name_ + ".bias";
    w_.init_zero(out_ch, static_cast<Eigen::Index>(in_ch) * ksize);
    b_.init_zero(out_ch, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * ksize);
    uniform_fill(w_.value, bound, init);
    uniform_fill(b_.value, bound, init);
  }

  const std::string& name() const override { return name_; }

  Batch<S> forward(const Batch<S>& in, Mode) override {
    detail::check_batch_shape(in_ch_, in.data.rows(), in.data.cols(), in.length, in.batch, name_);
    if (in.length < ksize_)
      throw ValidationError(name_ + ": input length " + std::to_string(in.length) +
                            " shorter than kernel " + std::to_string(ksize_));
    in_len_ = in.length;
    batch_ = in.batch;
    const int e = in.length - ksize_ + 1;
    const Eigen::Index n = in.batch;
    cols_.resize(static_cast<Eigen::Index>(in_ch_) * ksize_, static_cast<Eigen::Index>(e) * n);
    for (int x = 0; x < e; ++x)
      for (int k = 0; k < in_ch_; ++k)
        for (int r = 0; r < ksize_; ++r)
          cols_.row(static_cast<Eigen::Index>(k) * ksize_ + r)
              .segment(static_cast<Eigen::Index>(x) * n, n) =
              in.data.row(k).segment(static_cast<Eigen::Index>(x + r) * n, n);
    Batch<S> out;
    out.channels = out_ch_;
    out.length = e;
    out.batch = in.batch;
    out.data.noalias() = w_.value * cols_;
    out.data.colwise() += b_.value.col(0);
    return out;
  }

  Batch<S> backward(const Batch<S>& g) override {
    const int e = in_len_ - ksize_ + 1;
    detail::check_batch_shape(out_ch_, g.data.rows(), g.data.cols(), e, batch_, name_);
    w_.grad.noalias() = g.data * cols_.transpose();
    b_.grad = g.data.rowwise().sum();
    Matrix<S> gcols;
    gcols.noalias() = w_.value.transpose() * g.data;
    Batch<S> gin;
    gin.channels = in_ch_;
    gin.length = in_len_;
    gin.batch = batch_;
    gin.data = Matrix<S>::Zero(in_ch_, static_cast<Eigen::Index>(in_len_) * batch_);
    const Eigen::Index n = batch_;
    for (int x = 0; x < e; ++x)
      for (int k = 0; k < in_ch_; ++k)
        for (int r = 0; r < ksize_; ++r)
          gin.data.row(k).segment(static_cast<Eigen::Index>(x + r) * n, n) +=
              gcols.row(static_cast<Eigen::Index>(k) * ksize_ + r)
                  .segment(static_cast<Eigen::Index>(x) * n, n);
    return gin;
  }

  std::vector<ParamTensor<S>*> params() override { return {&w_, &b_}; }

 private:
  std::string name_;
  int in_ch_, out_ch_, ksize_;
  ParamTensor<S> w_, b_;
  Matrix<S> cols_;
  int in_len_ = 0, batch_ = 0;
};

// Convolution-shaped layer with untied weights: every output position has its
// own filter bank and bias. Input length is fixed at construction.
// Weight layout: out_ch x (in_ch*ksize*out_len); position x owns the column
// block [x*in_ch*ksize, (x+1)*in_ch*ksize). Bias: out_ch x out_len.
template <typename S>
class LocallyConnected : public Layer<S> {
 public:
  LocallyConnected(std::string name, int in_ch, int out_ch, int ksize, int in_len, Rng& init)
      : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize), in_len_(in_len) {
    if (in_ch < 1 || out_ch < 1 || ksize < 1)
      throw ValidationError(name_ + ": channel counts and kernel size must be >= 1");
    if (in_len < ksize)
      throw ValidationError(name_ + ": input length shorter than kernel");
    out_len_ = in_len - ksize + 1;
    w_.name = name_ + ".weight";
    b_.name = name_ + ".bias";
    w_.init_zero(out_ch, static_cast<Eigen::Index>(in_ch) * ksize * out_len_);
    b_.init_zero(out_ch, out_len_);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * ksize);
    uniform_fill(w_.value, bound, init);
    uniform_fill(b_.value, bound, init);
  }

  const std::string& name() const override { return name_; }

  Batch<S> forward(const Batch<S>& in, Mode) override {
    detail::check_batch_shape(in_ch_, in.data.rows(), in.data.cols(), in.length, in.batch, name_);
    if (in.length != in_len_)
      throw ValidationError(name_ + ": untied weights expect input length " +
                            std::to_string(in_len_) + ", got " + std::to_string(in.length));
    batch_ = in.batch;
    input_ = in.data;
    const Eigen::Index n = in.batch;
    const Eigen::Index kc = static_cast<Eigen::Index>(in_ch_) * ksize_;
    Batch<S> out;
    out.channels = out_ch_;
    out.length = out_len_;
    out.batch = in.batch;
    out.data.resize(out_ch_, static_cast<Eigen::Index>(out_len_) * n);
    Matrix<S> patch(kc, n);
    for (int x = 0; x < out_len_; ++x) {
      const auto wx = w_.value.middleCols(static_cast<Eigen::Index>(x) * kc, kc);
      auto ox = out.data.middleCols(static_cast<Eigen::Index>(x) * n, n);
      if (ksize_ == 1) {
        ox.noalias() = wx * in.data.middleCols(static_cast<Eigen::Index>(x) * n, n);
      } else {
        for (int k = 0; k < in_ch_; ++k)
          for (int r = 0; r < ksize_; ++r)
            patch.row(static_cast<Eigen::Index>(k) * ksize_ + r) =
                in.data.row(k).segment(static_cast<Eigen::Index>(x + r) * n, n);
        ox.noalias() = wx * patch;
      }
      ox.colwise() += b_.value.col(x);
    }
    return out;
  }

  Batch<S> backward(const Batch<S>& g) override {
    detail::check_batch_shape(out_ch_, g.data.rows(), g.data.cols(), out_len_, batch_, name_);
    const Eigen::Index n = batch_;
    const Eigen::Index kc = static_cast<Eigen::Index>(in_ch_) * ksize_;
    Batch<S> gin;
    gin.channels = in_ch_;
    gin.length = in_len_;
    gin.batch = batch_;
    gin.data = Matrix<S>::Zero(in_ch_, static_cast<Eigen::Index>(in_len_) * n);
    Matrix<S> patch(kc, n), gpatch(kc, n);
    for (int x = 0; x < out_len_; ++x) {
      const auto gx = g.data.middleCols(static_cast<Eigen::Index>(x) * n, n);
      const auto wx = w_.value.middleCols(static_cast<Eigen::Index>(x) * kc, kc);
      auto gwx = w_.grad.middleCols(static_cast<Eigen::Index>(x) * kc, kc);
      if (ksize_ == 1) {
        gwx.noalias() = gx * input_.middleCols(static_cast<Eigen::Index>(x) * n, n).transpose();
        gin.data.middleCols(static_cast<Eigen::Index>(x) * n, n).noalias() += wx.transpose() * gx;
      } else {
        for (int k = 0; k < in_ch_; ++k)
          for (int r = 0; r < ksize_; ++r)
            patch.row(static_cast<Eigen::Index>(k) * ksize_ + r) =
                input_.row(k).segment(static_cast<Eigen::Index>(x + r) * n, n);
        gwx.noalias() = gx * patch.transpose();
        gpatch.noalias() = wx.transpose() * gx;
        for (int k = 0; k < in_ch_; ++k)
          for (int r = 0; r < ksize_; ++r)
            gin.data.row(k).segment(static_cast<Eigen::Index>(x + r) * n, n) +=
                gpatch.row(static_cast<Eigen::Index>(k) * ksize_ + r);
      }
      b_.grad.col(x) = gx.rowwise().sum();
    }
    return gin;
  }

  std::vector<ParamTensor<S>*> params() override { return {&w_, &b_}; }

 private:
  std::string name_;
  int in_ch_, out_ch_, ksize_, in_len_, out_len_ = 0;
  ParamTensor<S> w_, b_;
  Matrix<S> input_;
  int batch_ = 0;
};

// Batch normalization over each row (channel / feature). In the
// convolutional stage statistics pool over positions and samples; in the
// dense stage over samples. Train mode uses biased batch variance for the
// normalization and folds the unbiased variance into the running estimate.
template <typename S>
class BatchNorm : public Layer<S> {
 public:
  BatchNorm(std::string name, int channels, double eps = 1e-5, double momentum = 0.1)
      : name_(std::move(name)), channels_(channels), eps_(static_cast<S>(eps)),
        momentum_(static_cast<S>(momentum)) {
    if (channels < 1) throw ValidationError(name_ + ": channels must be >= 1");
    if (eps <= 0) throw ValidationError(name_ + ": eps must be positive");
    if (momentum <= 0 || momentum > 1)
      throw ValidationError(name_ + ": momentum must be in (0, 1]");
    gamma_.name = name_ + ".gamma";
    beta_.name = name_ + ".beta";
    gamma_.init_zero(channels, 1);
    beta_.init_zero(channels, 1);
    gamma_.value.setOnes();
    run_mean_.name = name_ + ".running_mean";
    run_mean_.value = Matrix<S>::Zero(channels, 1);
    run_var_.name = name_ + ".running_var";
    run_var_.value = Matrix<S>::Ones(channels, 1);
    count_.name = name_ + ".batches_seen";
    count_.value = Matrix<S>::Zero(1, 1);
  }

  const std::string& name() const override { return name_; }

  Batch<S> forward(const Batch<S>& in, Mode mode) override {
    detail::check_batch_shape(channels_, in.data.rows(), in.data.cols(), in.length, in.batch,
                              name_);
    last_mode_ = mode;
    Batch<S> out;
    out.channels = in.channels;
    out.length = in.length;
    out.batch = in.batch;
    if (mode == Mode::Train) {
      if (in.batch < 2)
        throw ValidationError(name_ + ": train mode requires batch size >= 2");
      const Eigen::Index m = in.data.cols();
      Vector<S> mu = in.data.rowwise().mean();
      Matrix<S> xc = in.data.colwise() - mu;
      Vector<S> var = xc.array().square().rowwise().mean();
      inv_std_ = (var.array() + eps_).rsqrt();
      xhat_ = xc.array().colwise() * inv_std_.array();
      out.data = (xhat_.array().colwise() * gamma_.value.col(0).array()).colwise() +
                 beta_.value.col(0).array();
      const S unbias = static_cast<S>(m) / static_cast<S>(m - 1);
      run_mean_.value.col(0) = (S(1) - momentum_) * run_mean_.value.col(0) + momentum_ * mu;
      run_var_.value.col(0) =
          (S(1) - momentum_) * run_var_.value.col(0) + momentum_ * (unbias * var);
      count_.value(0, 0) += S(1);
    } else {
      if (count_.value(0, 0) == S(0))
        throw StateError(name_ + ": eval mode before any training batch (no running stats)");
      eval_scale_ = gamma_.value.col(0).array() * (run_var_.value.col(0).array() + eps_).rsqrt();
      out.data = (in.data.colwise() - run_mean_.value.col(0)).array().colwise() *
                 eval_scale_.array();
      out.data = (out.data.colwise() + beta_.value.col(0)).eval();
    }
    return out;
  }

  Batch<S> backward(const Batch<S>& g) override {
    Batch<S> gin;
    gin.channels = g.channels;
    gin.length = g.length;
    gin.batch = g.batch;
    if (last_mode_ == Mode::Eval) {
      gin.data = g.data.array().colwise() * eval_scale_.array();
      return gin;
    }
    detail::check_batch_shape(channels_, g.data.rows(), g.data.cols(), g.length, g.batch, name_);
    const S m = static_cast<S>(g.data.cols());
    beta_.grad = g.data.rowwise().sum();
    gamma_.grad = (g.data.array() * xhat_.array()).rowwise().sum();
    // dx = gamma * inv_std / m * (m*g - dbeta - xhat * dgamma), row-wise
    Matrix<S> t = m * g.data;
    t.colwise() -= beta_.grad.col(0);
    t.array() -= xhat_.array().colwise() * gamma_.grad.col(0).array();
    Vector<S> scale = gamma_.value.col(0).array() * inv_std_.array() / m;
    gin.data = t.array().colwise() * scale.array();
    return gin;
  }

  std::vector<ParamTensor<S>*> params() override { return {&gamma_, &beta_}; }
  std::vector<StateTensor<S>*> state() override { return {&run_mean_, &run_var_, &count_}; }

  const Matrix<S>& running_mean() const { return run_mean_.value; }
  const Matrix<S>& running_var() const { return run_var_.value; }

 private:
  std::string name_;
  int channels_;
  S eps_, momentum_;
  ParamTensor<S> gamma_, beta_;
  StateTensor<S> run_mean_, run_var_, count_;
  Matrix<S> xhat_;
  Eigen::Array<S, Eigen::Dynamic, 1> inv_std_, eval_scale_;
  Mode last_mode_ = Mode::Train;
};

template <typename S>
class ReLU : public Layer<S> {
 public:
  explicit ReLU(std::string name) : name_(std::move(name)) {}
  const std::string& name() const override { return name_; }

  Batch<S> forward(const Batch<S>& in, Mode) override {
    Batch<S> out = in;
    out.data = in.data.cwiseMax(S(0));
    out_ = out.data;
    return out;
  }

  Batch<S> backward(const Batch<S>& g) override {
    Batch<S> gin = g;
    gin.data = (out_.array() > S(0)).template cast<S>() * g.data.array();
    return gin;
  }

 private:
  std::string name_;
  Matrix<S> out_;
};

// Inverted dropout: training multiplies each activation independently by
// 0 or 1/(1-p); eval is the identity. The mask can be frozen so a
// finite-difference check sees the same network on every probe.
template <typename S>
class Dropout : public Layer<S> {
 public:
  Dropout(std::string name, double p, std::uint64_t seed)
      : name_(std::move(name)), p_(p), rng_(seed) {
    if (p < 0 || p >= 1) throw ValidationError(name_ + ": dropout p must be in [0, 1)");
  }

  const std::string& name() const override { return name_; }

  Batch<S> forward(const Batch<S>& in, Mode mode) override {
    last_mode_ = mode;
    Batch<S> out = in;
    if (mode == Mode::Eval || p_ == 0.0) return out;
    const bool reuse = freeze_ && mask_.rows() == in.data.rows() && mask_.cols() == in.data.cols();
    if (!reuse) {
      mask_.resize(in.data.rows(), in.data.cols());
      const S keep_inv = static_cast<S>(1.0 / (1.0 - p_));
      for (Eigen::Index r = 0; r < mask_.rows(); ++r)
        for (Eigen::Index c = 0; c < mask_.cols(); ++c)
          mask_(r, c) = rng_.uniform() < p_ ? S(0) : keep_inv;
    }
    out.data = in.data.cwiseProduct(mask_);
    return out;
  }

  Batch<S> backward(const Batch<S>& g) override {
    Batch<S> gin = g;
    if (last_mode_ == Mode::Eval || p_ == 0.0) return gin;
    gin.data = g.data.cwiseProduct(mask_);
    return gin;
  }

  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  void freeze_mask(bool on) { freeze_ = on; }
  const Matrix<S>& mask() const { return mask_; }

 private:
  std::string name_;
  double p_;
  Rng rng_;
  Matrix<S> mask_;
  bool freeze_ = false;
  Mode last_mode_ = Mode::Train;
};

template <typename S>
class FullyConnected : public Layer<S> {
 public:
  FullyConnected(std::string name, int in_features, int out_features, Rng& init)
      : name_(std::move(name)), in_(in_features), out_(out_features) {
    if (in_features < 1 || out_features < 1)
      throw ValidationError(name_ + ": feature counts must be >= 1");
    w_.name = name_ + ".weight";
    b_.name = name_ + ".bias";
    w_.init_zero(out_features, in_features);
    b_.init_zero(out_features, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
    uniform_fill(w_.value, bound, init);
    uniform_fill(b_.value, bound, init);
  }

  const std::string& name() const override { return name_; }

  Batch<S> forward(const Batch<S>& in, Mode) override {
    if (in.length != 1)
      throw ValidationError(name_ + ": dense layer expects flattened input (length 1)");
    detail::check_batch_shape(in_, in.data.rows(), in.data.cols(), 1, in.batch, name_);
    input_ = in.data;
    Batch<S> out;
    out.channels = out_;
    out.length = 1;
    out.batch = in.batch;
    out.data.noalias() = w_.value * in.data;
    out.data.colwise() += b_.value.col(0);
    return out;
  }

  Batch<S> backward(const Batch<S>& g) override {
    detail::check_batch_shape(out_, g.data.rows(), g.data.cols(), 1, g.batch, name_);
    w_.grad.noalias() = g.data * input_.transpose();
    b_.grad = g.data.rowwise().sum();
    Batch<S> gin;
    gin.channels = in_;
    gin.length = 1;
    gin.batch = g.batch;
    gin.data.noalias() = w_.value.transpose() * g.data;
    return gin;
  }

  std::vector<ParamTensor<S>*> params() override { return {&w_, &b_}; }

 private:
  std::string name_;
  int in_, out_;
  ParamTensor<S> w_, b_;
  Matrix<S> input_;
};

// (C x L*N) -> (C*L x N); flat feature index = channel * L + position.
template <typename S>
class Flatten : public Layer<S> {
 public:
  explicit Flatten(std::string name) : name_(std::move(name)) {}
  const std::string& name() const override { return name_; }

  Batch<S> forward(const Batch<S>& in, Mode) override {
    channels_ = in.channels;
    length_ = in.length;
    Batch<S> out;
    out.channels = in.channels * in.length;
    out.length = 1;
    out.batch = in.batch;
    out.data.resize(out.channels, in.batch);
    const Eigen::Index n = in.batch;
    for (int c = 0; c < in.channels; ++c)
      for (int x = 0; x < in.length; ++x)
        out.data.row(static_cast<Eigen::Index>(c) * in.length + x) =
            in.data.row(c).segment(static_cast<Eigen::Index>(x) * n, n);
    return out;
  }

  Batch<S> backward(const Batch<S>& g) override {
    Batch<S> gin;
    gin.channels = channels_;
    gin.length = length_;
    gin.batch = g.batch;
    gin.data.resize(channels_, static_cast<Eigen::Index>(length_) * g.batch);
    const Eigen::Index n = g.batch;
    for (int c = 0; c < channels_; ++c)
      for (int x = 0; x < length_; ++x)
        gin.data.row(c).segment(static_cast<Eigen::Index>(x) * n, n) =
            g.data.row(static_cast<Eigen::Index>(c) * length_ + x);
    return gin;
  }

 private:
  std::string name_;
  int channels_ = 0, length_ = 0;
};

// ---- classification head (softmax folded into the loss) ----

template <typename S>
Matrix<S> softmax_columns(const Matrix<S>& logits) {
  Matrix<S> p(logits.rows(), logits.cols());
  for (Eigen::Index n = 0; n < logits.cols(); ++n) {
    const S mx = logits.col(n).maxCoeff();
    p.col(n) = (logits.col(n).array() - mx).exp();
    p.col(n) /= p.col(n).sum();
  }
  return p;
}

template <typename S>
void check_labels(const Matrix<S>& logits, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols())
    throw ValidationError("cross_entropy: label count must match batch size");
  for (int l : labels)
    if (l < 0 || l >= logits.rows())
      throw ValidationError("cross_entropy: label out of range");
}

// Mean negative log-likelihood in nats, computed via the max-shifted
// log-sum-exp so confident logits do not overflow.
template <typename S>
S cross_entropy(const Matrix<S>& logits, const std::vector<int>& labels) {
  check_labels(logits, labels);
  S total = 0;
  for (Eigen::Index n = 0; n < logits.cols(); ++n) {
    const S mx = logits.col(n).maxCoeff();
    const S lse = mx + std::log((logits.col(n).array() - mx).exp().sum());
    total += lse - logits(labels[static_cast<size_t>(n)], n);
  }
  return total / static_cast<S>(logits.cols());
}

// d(mean CE)/d(logits) = (softmax - onehot) / batch.
template <typename S>
Matrix<S> cross_entropy_grad(const Matrix<S>& logits, const std::vector<int>& labels) {
  check_labels(logits, labels);
  Matrix<S> g = softmax_columns(logits);
  const S inv_n = S(1) / static_cast<S>(logits.cols());
  for (Eigen::Index n = 0; n < logits.cols(); ++n)
    g(labels[static_cast<size_t>(n)], n) -= S(1);
  return g * inv_n;
}

}  // namespace semg

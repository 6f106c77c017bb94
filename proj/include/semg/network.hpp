#pragma once

// Network = ordered layer list built from a declarative NetworkSpec. The
// builder walks shapes through the spec so mismatched dimensions fail at
// construction, not mid-training. Also: the fixed gesture-recognition
// architecture used everywhere in this project, and checkpoint save/load.

#include "semg/binary_io.hpp"
#include "semg/common.hpp"
#include "semg/nn_layers.hpp"
#include "semg/rng.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace semg {

enum class LayerKind : uint32_t {
  Conv1d = 1,
  LocallyConnected = 2,
  BatchNorm = 3,
  ReLU = 4,
  Dropout = 5,
  FullyConnected = 6,
  Flatten = 7,
};

struct LayerSpec {
  LayerKind kind;
  // Meaning depends on kind: Conv/LC (a=in_ch, b=out_ch, c=ksize),
  // BatchNorm (a=channels), FullyConnected (a=in, b=out), Dropout (p).
  int a = 0, b = 0, c = 0;
  double p = 0.0;
};

struct NetworkSpec {
  int in_channels = kNumChannels;
  int in_length = kWindowLength;
  std::vector<LayerSpec> layers;
};

// The 4-channel / 75-sample gesture classifier: two shared-weight conv
// blocks, two untied ("locally connected") blocks, then a dense head ending
// in 6 logits. Softmax lives in the loss. Dropout precedes the two wide
// dense layers and can be omitted (gradient checking uses both variants).
inline NetworkSpec gesture_net_spec(bool with_dropout = true, double dropout_p = 0.5) {
  NetworkSpec s;
  s.in_channels = kNumChannels;
  s.in_length = kWindowLength;
  auto conv = [](int i, int o, int k) { return LayerSpec{LayerKind::Conv1d, i, o, k, 0}; };
  auto lc = [](int i, int o, int k) { return LayerSpec{LayerKind::LocallyConnected, i, o, k, 0}; };
  auto bn = [](int c) { return LayerSpec{LayerKind::BatchNorm, c, 0, 0, 0}; };
  auto relu = [] { return LayerSpec{LayerKind::ReLU}; };
  auto fc = [](int i, int o) { return LayerSpec{LayerKind::FullyConnected, i, o, 0, 0}; };

  s.layers.push_back(conv(4, 64, 3));
  s.layers.push_back(bn(64));
  s.layers.push_back(relu());
  s.layers.push_back(conv(64, 64, 3));
  s.layers.push_back(bn(64));
  s.layers.push_back(relu());
  s.layers.push_back(lc(64, 64, 1));
  s.layers.push_back(bn(64));
  s.layers.push_back(relu());
  s.layers.push_back(lc(64, 64, 1));
  s.layers.push_back(bn(64));
  s.layers.push_back(relu());
  s.layers.push_back(LayerSpec{LayerKind::Flatten});
  if (with_dropout) s.layers.push_back(LayerSpec{LayerKind::Dropout, 0, 0, 0, dropout_p});
  s.layers.push_back(fc(4544, 512));
  s.layers.push_back(bn(512));
  s.layers.push_back(relu());
  if (with_dropout) s.layers.push_back(LayerSpec{LayerKind::Dropout, 0, 0, 0, dropout_p});
  s.layers.push_back(fc(512, 512));
  s.layers.push_back(bn(512));
  s.layers.push_back(relu());
  s.layers.push_back(fc(512, 128));
  s.layers.push_back(bn(128));
  s.layers.push_back(relu());
  s.layers.push_back(fc(128, kNumClasses));
  return s;
}

template <typename S>
class Network {
 public:
  Network() = default;

  static Network build(const NetworkSpec& spec, std::uint64_t seed) {
    Network net;
    net.spec_ = spec;
    Rng init(derive_seed(seed, "net-init"));
    int ch = spec.in_channels;
    int len = spec.in_length;
    std::map<std::string, int> counters;
    auto next_name = [&counters](const char* base) {
      return std::string(base) + std::to_string(++counters[base]);
    };
    int li = 0;
    for (const auto& l : spec.layers) {
      ++li;
      const std::string where = "layer " + std::to_string(li);
      switch (l.kind) {
        case LayerKind::Conv1d: {
          if (l.a != ch)
            throw ValidationError(where + ": conv expects " + std::to_string(l.a) +
                                  " input channels, shape walk has " + std::to_string(ch));
          if (len < l.c) throw ValidationError(where + ": input length shorter than kernel");
          net.layers_.push_back(
              std::make_unique<Conv1d<S>>(next_name("conv"), l.a, l.b, l.c, init));
          ch = l.b;
          len = len - l.c + 1;
          break;
        }
        case LayerKind::LocallyConnected: {
          if (l.a != ch)
            throw ValidationError(where + ": locally-connected input channel mismatch");
          net.layers_.push_back(
              std::make_unique<LocallyConnected<S>>(next_name("lc"), l.a, l.b, l.c, len, init));
          ch = l.b;
          len = len - l.c + 1;
          break;
        }
        case LayerKind::BatchNorm: {
          if (l.a != ch) throw ValidationError(where + ": batch-norm channel mismatch");
          net.layers_.push_back(std::make_unique<BatchNorm<S>>(next_name("bn"), l.a));
          break;
        }
        case LayerKind::ReLU:
          net.layers_.push_back(std::make_unique<ReLU<S>>(next_name("relu")));
          break;
        case LayerKind::Dropout: {
          auto drop = std::make_unique<Dropout<S>>(next_name("drop"), l.p,
                                                   derive_seed(seed, "dropout", counters["drop"]));
          net.dropouts_.push_back(drop.get());
          net.layers_.push_back(std::move(drop));
          break;
        }
        case LayerKind::FullyConnected: {
          if (len != 1)
            throw ValidationError(where + ": dense layer before flatten (length != 1)");
          if (l.a != ch)
            throw ValidationError(where + ": dense expects " + std::to_string(l.a) +
                                  " features, shape walk has " + std::to_string(ch));
          net.layers_.push_back(
              std::make_unique<FullyConnected<S>>(next_name("fc"), l.a, l.b, init));
          ch = l.b;
          break;
        }
        case LayerKind::Flatten:
          net.layers_.push_back(std::make_unique<Flatten<S>>(next_name("flatten")));
          ch = ch * len;
          len = 1;
          break;
        default:
          throw ValidationError(where + ": unknown layer kind");
      }
    }
    net.out_features_ = ch;
    net.out_length_ = len;
    return net;
  }

  const NetworkSpec& spec() const { return spec_; }
  int out_features() const { return out_features_; }
  int out_length() const { return out_length_; }

  Batch<S> forward(const Batch<S>& in, Mode mode) {
    if (in.channels != spec_.in_channels || in.length != spec_.in_length)
      throw ValidationError("network input must be " + std::to_string(spec_.in_channels) + "x" +
                            std::to_string(spec_.in_length));
    if (in.batch < 1) throw ValidationError("network input batch must be >= 1");
    if (!in.shape_ok()) throw ValidationError("network input matrix does not match its header");
    Batch<S> a = in;
    for (auto& l : layers_) a = l->forward(a, mode);
    last_out_ = a;
    return a;
  }

  // grad w.r.t. the logits returned by the last forward().
  void backward(const Matrix<S>& dlogits) {
    if (dlogits.rows() != last_out_.data.rows() || dlogits.cols() != last_out_.data.cols())
      throw ValidationError("backward gradient shape does not match last forward output");
    Batch<S> g;
    g.channels = last_out_.channels;
    g.length = last_out_.length;
    g.batch = last_out_.batch;
    g.data = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  }

  // Class probabilities (eval mode), kNumClasses x batch.
  Matrix<S> predict_proba(const Batch<S>& in) {
    return softmax_columns(forward(in, Mode::Eval).data);
  }

  std::vector<ParamTensor<S>*> params() {
    std::vector<ParamTensor<S>*> out;
    for (auto& l : layers_)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }

  std::vector<StateTensor<S>*> state() {
    std::vector<StateTensor<S>*> out;
    for (auto& l : layers_)
      for (auto* s : l->state()) out.push_back(s);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  // Architecture depth as usually quoted for this model: weighted layers
  // (conv / locally-connected / dense) plus the softmax stage.
  int logical_layer_count() const {
    int n = 1;  // softmax
    for (const auto& l : spec_.layers)
      if (l.kind == LayerKind::Conv1d || l.kind == LayerKind::LocallyConnected ||
          l.kind == LayerKind::FullyConnected)
        ++n;
    return n;
  }

  void zero_grads() {
    for (auto* p : params()) p->grad.setZero();
  }

  void reseed_dropout(std::uint64_t seed) {
    int i = 0;
    for (auto* d : dropouts_) d->reseed(derive_seed(seed, "dropout", static_cast<std::uint64_t>(i++)));
  }

  void freeze_dropout_masks(bool on) {
    for (auto* d : dropouts_) d->freeze_mask(on);
  }

  const std::vector<Dropout<S>*>& dropout_layers() const { return dropouts_; }

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer<S>>> layers_;
  std::vector<Dropout<S>*> dropouts_;
  Batch<S> last_out_;
  int out_features_ = 0;
  int out_length_ = 1;
};

// ---- checkpointing ----
// Fixed little-endian layout: magic, version, element width, the spec, then
// every parameter and state tensor by name. Round-trips bit-exactly.

namespace detail {

inline constexpr char kNetMagic[8] = {'S', 'E', 'M', 'G', 'N', 'E', 'T', '1'};
inline constexpr uint32_t kNetVersion = 1;

template <typename S>
void write_tensor(std::ostream& os, const std::string& name, const Matrix<S>& m) {
  const auto len = static_cast<uint16_t>(name.size());
  put(os, len);
  os.write(name.data(), len);
  put<uint64_t>(os, static_cast<uint64_t>(m.rows()));
  put<uint64_t>(os, static_cast<uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(S) * static_cast<size_t>(m.size())));
}

template <typename S>
std::pair<std::string, Matrix<S>> read_tensor(std::istream& is) {
  const auto len = get<uint16_t>(is, "tensor name length");
  std::string name(len, '\0');
  if (!is.read(name.data(), len)) throw IoError("checkpoint truncated in tensor name");
  const auto rows = get<uint64_t>(is, "tensor rows");
  const auto cols = get<uint64_t>(is, "tensor cols");
  Matrix<S> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (!is.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(S) * static_cast<size_t>(m.size()))))
    throw IoError("checkpoint truncated in tensor data for " + name);
  return {name, std::move(m)};
}

}  // namespace detail

template <typename S>
void save_network(Network<S>& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(detail::kNetMagic, sizeof(detail::kNetMagic));
  detail::put<uint32_t>(os, detail::kNetVersion);
  detail::put<uint8_t>(os, static_cast<uint8_t>(sizeof(S)));
  const auto& spec = net.spec();
  detail::put<int32_t>(os, spec.in_channels);
  detail::put<int32_t>(os, spec.in_length);
  detail::put<uint32_t>(os, static_cast<uint32_t>(spec.layers.size()));
  for (const auto& l : spec.layers) {
    detail::put<uint32_t>(os, static_cast<uint32_t>(l.kind));
    detail::put<int32_t>(os, l.a);
    detail::put<int32_t>(os, l.b);
    detail::put<int32_t>(os, l.c);
    detail::put<double>(os, l.p);
  }
  auto params = net.params();
  auto state = net.state();
  detail::put<uint32_t>(os, static_cast<uint32_t>(params.size()));
  for (auto* p : params) detail::write_tensor(os, p->name, p->value);
  detail::put<uint32_t>(os, static_cast<uint32_t>(state.size()));
  for (auto* s : state) detail::write_tensor(os, s->name, s->value);
  if (!os) throw IoError("write failed: " + path.string());
}

template <typename S>
Network<S> load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::kNetMagic, 8) != 0)
    throw IoError("bad magic in checkpoint: " + path.string());
  const auto version = detail::get<uint32_t>(is, "version");
  if (version != detail::kNetVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto width = detail::get<uint8_t>(is, "element width");
  if (width != sizeof(S))
    throw IoError("checkpoint element width is " + std::to_string(int(width)) +
                  " bytes, expected " + std::to_string(sizeof(S)));
  NetworkSpec spec;
  spec.in_channels = detail::get<int32_t>(is, "in_channels");
  spec.in_length = detail::get<int32_t>(is, "in_length");
  const auto n_layers = detail::get<uint32_t>(is, "layer count");
  for (uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    l.kind = static_cast<LayerKind>(detail::get<uint32_t>(is, "layer kind"));
    l.a = detail::get<int32_t>(is, "layer a");
    l.b = detail::get<int32_t>(is, "layer b");
    l.c = detail::get<int32_t>(is, "layer c");
    l.p = detail::get<double>(is, "layer p");
    spec.layers.push_back(l);
  }
  Network<S> net = Network<S>::build(spec, 0);
  auto fill = [&is, &path](auto tensors, const char* what, uint32_t count) {
    std::map<std::string, Matrix<S>*> by_name;
    for (auto* t : tensors) by_name[t->name] = &t->value;
    if (count != by_name.size())
      throw IoError("checkpoint has " + std::to_string(count) + " " + what + " tensors, expected " +
                    std::to_string(by_name.size()) + ": " + path.string());
    for (uint32_t i = 0; i < count; ++i) {
      auto [name, m] = detail::read_tensor<S>(is);
      auto it = by_name.find(name);
      if (it == by_name.end()) throw IoError("checkpoint has unknown tensor " + name);
      if (it->second->rows() != m.rows() || it->second->cols() != m.cols())
        throw IoError("checkpoint tensor " + name + " has wrong shape");
      *it->second = std::move(m);
    }
  };
  const auto n_params = detail::get<uint32_t>(is, "param count");
  fill(net.params(), "parameter", n_params);
  const auto n_state = detail::get<uint32_t>(is, "state count");
  fill(net.state(), "state", n_state);
  return net;
}

}  // namespace semg

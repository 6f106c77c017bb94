#pragma once

// Sliding-window extraction and the per-session split used by every
// experiment: a seeded random holdout (final test material), with the
// remaining windows cut - still in temporal order - into n_intervals
// contiguous runs that alternate between fold 1 and fold 2. Interleaving
// keeps both folds spread across the whole session so fold-wise training and
// validation see the same slow drifts.

#include "semg/common.hpp"
#include "semg/rng.hpp"
#include "semg/session_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace semg {

struct LabeledWindow {
  Matrixf data;          // kWindowLength x kNumChannels (samples x channels)
  int label = 0;         // 0 .. kNumClasses-1
  int origin_index = 0;  // sample offset of the window start in its session
};

struct WindowConfig {
  int length = kWindowLength;
  int stride = kWindowStride;
};

inline void validate(const WindowConfig& c) {
  if (c.length < 1) throw ValidationError("WindowConfig.length must be >= 1");
  if (c.stride < 1) throw ValidationError("WindowConfig.stride must be >= 1");
}

inline int window_count(int n_samples, const WindowConfig& c = {}) {
  validate(c);
  if (n_samples < c.length) return 0;
  return (n_samples - c.length) / c.stride + 1;
}

// Each window takes the label of its center sample. Sessions shorter than one
// window yield an empty set (callers can treat that as a skip).
inline std::vector<LabeledWindow> make_windows(const SessionRecording& rec,
                                               const WindowConfig& cfg = {}) {
  validate(cfg);
  const int n = rec.n_samples();
  const int count = window_count(n, cfg);
  std::vector<LabeledWindow> out;
  out.reserve(static_cast<size_t>(count));
  for (int w = 0; w < count; ++w) {
    const int off = w * cfg.stride;
    LabeledWindow lw;
    lw.origin_index = off;
    lw.label = rec.labels[static_cast<size_t>(off + cfg.length / 2)];
    lw.data = rec.channels.block(0, off, kNumChannels, cfg.length).transpose();
    out.push_back(std::move(lw));
  }
  return out;
}

struct SessionSplit {
  std::vector<LabeledWindow> holdout;  // random test reserve
  std::vector<LabeledWindow> fold1;    // odd interleaved intervals
  std::vector<LabeledWindow> fold2;    // even interleaved intervals
};

struct SplitConfig {
  double holdout_fraction = 0.10;
  int n_intervals = 10;
  std::uint64_t seed = 0;
};

inline void validate(const SplitConfig& c) {
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0))
    throw ValidationError("SplitConfig.holdout_fraction must be in [0, 1)");
  if (c.n_intervals < 2) throw ValidationError("SplitConfig.n_intervals must be >= 2");
}

inline SessionSplit split_session(const std::vector<LabeledWindow>& windows,
                                  const SplitConfig& cfg) {
  validate(cfg);
  const int m = static_cast<int>(windows.size());
  if (m < cfg.n_intervals)
    throw ValidationError("split needs at least n_intervals windows, got " + std::to_string(m));
  const int n_hold = static_cast<int>(std::llround(cfg.holdout_fraction * m));

  // Sample the holdout without replacement via a seeded partial shuffle.
  Rng rng(cfg.seed);
  std::vector<int> order(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  std::vector<char> held(static_cast<size_t>(m), 0);
  for (int i = 0; i < n_hold; ++i) held[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;

  SessionSplit out;
  out.holdout.reserve(static_cast<size_t>(n_hold));
  std::vector<int> remaining;
  remaining.reserve(static_cast<size_t>(m - n_hold));
  for (int i = 0; i < m; ++i) {
    if (held[static_cast<size_t>(i)])
      out.holdout.push_back(windows[static_cast<size_t>(i)]);
    else
      remaining.push_back(i);  // ascending: temporal order preserved
  }

  // n_intervals contiguous runs; earlier intervals absorb the remainder.
  const int r = static_cast<int>(remaining.size());
  if (r < cfg.n_intervals)
    throw ValidationError("too few windows left after holdout to form intervals");
  const int base = r / cfg.n_intervals;
  const int extra = r % cfg.n_intervals;
  int pos = 0;
  for (int k = 1; k <= cfg.n_intervals; ++k) {
    const int len = base + (k <= extra ? 1 : 0);
    auto& fold = (k % 2 == 1) ? out.fold1 : out.fold2;
    for (int j = 0; j < len; ++j)
      fold.push_back(windows[static_cast<size_t>(remaining[static_cast<size_t>(pos++)])]);
  }
  return out;
}

// Per-channel standardization statistics, fit on training windows only.
struct ChannelStats {
  std::array<double, kNumChannels> mean{};
  std::array<double, kNumChannels> stddev{};  // population, floored at 1e-8
};

inline ChannelStats fit_channel_stats(const std::vector<LabeledWindow>& train) {
  if (train.empty()) throw ValidationError("fit_channel_stats needs at least one window");
  ChannelStats st;
  std::array<double, kNumChannels> sum{}, sum2{};
  long long n = 0;
  for (const auto& w : train) {
    for (Eigen::Index i = 0; i < w.data.rows(); ++i)
      for (int c = 0; c < kNumChannels; ++c) {
        const double v = w.data(i, c);
        sum[static_cast<size_t>(c)] += v;
        sum2[static_cast<size_t>(c)] += v * v;
      }
    n += w.data.rows();
  }
  for (int c = 0; c < kNumChannels; ++c) {
    const double mu = sum[static_cast<size_t>(c)] / static_cast<double>(n);
    const double var =
        std::max(0.0, sum2[static_cast<size_t>(c)] / static_cast<double>(n) - mu * mu);
    st.mean[static_cast<size_t>(c)] = mu;
    st.stddev[static_cast<size_t>(c)] = std::max(std::sqrt(var), 1e-8);
  }
  return st;
}

inline void apply_channel_stats(std::vector<LabeledWindow>& windows, const ChannelStats& st) {
  for (auto& w : windows)
    for (int c = 0; c < kNumChannels; ++c)
      w.data.col(c) = (w.data.col(c).array() - static_cast<float>(st.mean[static_cast<size_t>(c)])) /
                      static_cast<float>(st.stddev[static_cast<size_t>(c)]);
}

}  // namespace semg

#pragma once

// Finite-difference validation of the hand-written backward passes.
//
// The harness runs one stochastic forward (so dropout draws its masks), then
// freezes those masks and compares analytic parameter gradients against
// central differences of the cross-entropy loss. Sampling a few dozen entries
// per tensor keeps the full architecture checkable in seconds while still
// touching every weight matrix.

#include "semg/common.hpp"
#include "semg/network.hpp"
#include "semg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace semg {

struct GradCheckConfig {
  double step = 1e-5;          // absolute central-difference step
  int samples_per_tensor = 24; // random entries checked per tensor (all if fewer)
  std::uint64_t seed = 1234;
  std::string name_filter;     // empty = every tensor; else layer or tensor name
  // Test fixture: scales the analytic gradient of the first checked tensor so
  // negative-control runs fail loudly. 1.0 = no corruption.
  double corrupt_factor = 1.0;
};

struct GradCheckEntry {
  std::string tensor;
  Eigen::Index row = 0, col = 0;
  double analytic = 0, numeric = 0, rel_err = 0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  int n_checked = 0;
  // Entries where both |analytic| and |numeric| fall below the relative-error
  // floor. At step h the central difference carries O(eps/h) rounding noise,
  // so such pairs cannot be told apart from an exact zero and comparing them
  // only measures that noise. They are counted here instead.
  int n_skipped_zero = 0;
  // Entries whose central differences at h and h/2 disagree. For a smooth
  // loss the two estimates match to O(h^2); a large gap means the interval
  // straddles a point where the loss is not differentiable (a ReLU
  // boundary), so the difference quotient averages two one-sided slopes and
  // says nothing about the analytic gradient.
  int n_skipped_kink = 0;
  GradCheckEntry worst;
};

namespace detail {
inline bool gradcheck_name_match(const std::string& tensor, const std::string& filter) {
  if (filter.empty()) return true;
  if (tensor == filter) return true;
  return tensor.size() > filter.size() && tensor.compare(0, filter.size(), filter) == 0 &&
         tensor[filter.size()] == '.';
}
}  // namespace detail

// Runs in train mode: that is the mode whose gradients the optimizer
// consumes, and batch-norm's train-mode backward is the delicate one.
template <typename S>
GradCheckResult grad_check(Network<S>& net, const Batch<S>& input,
                           const std::vector<int>& labels, const GradCheckConfig& cfg = {}) {
  static_assert(std::is_floating_point_v<S>);
  if (cfg.step <= 0) throw ValidationError("grad_check step must be positive");
  if (cfg.samples_per_tensor < 1)
    throw ValidationError("grad_check samples_per_tensor must be >= 1");

  // Draw dropout masks once, then keep them fixed for every probe.
  net.freeze_dropout_masks(false);
  Batch<S> out = net.forward(input, Mode::Train);
  net.freeze_dropout_masks(true);
  net.backward(cross_entropy_grad(out.data, labels));

  auto loss_at = [&]() {
    return static_cast<double>(cross_entropy(net.forward(input, Mode::Train).data, labels));
  };

  Rng rng(cfg.seed);
  GradCheckResult res;
  bool first_checked_tensor = true;
  int matched_tensors = 0;
  for (auto* p : net.params()) {
    if (!detail::gradcheck_name_match(p->name, cfg.name_filter)) continue;
    ++matched_tensors;
    const Eigen::Index size = p->value.size();
    std::vector<Eigen::Index> picks;
    if (size <= cfg.samples_per_tensor) {
      picks.resize(static_cast<size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) picks[static_cast<size_t>(i)] = i;
    } else {
      for (int i = 0; i < cfg.samples_per_tensor; ++i)
        picks.push_back(static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(size))));
    }
    const double corrupt = first_checked_tensor ? cfg.corrupt_factor : 1.0;
    first_checked_tensor = false;
    for (Eigen::Index flat : picks) {
      const Eigen::Index r = flat % p->value.rows();
      const Eigen::Index c = flat / p->value.rows();
      const S saved = p->value(r, c);
      p->value(r, c) = saved + static_cast<S>(cfg.step);
      const double lp = loss_at();
      p->value(r, c) = saved - static_cast<S>(cfg.step);
      const double lm = loss_at();
      p->value(r, c) = saved;
      const double numeric = (lp - lm) / (2.0 * cfg.step);
      const double analytic = static_cast<double>(p->grad(r, c)) * corrupt;
      constexpr double kFloor = 1e-8;
      if (std::abs(analytic) < kFloor && std::abs(numeric) < kFloor) {
        // e.g. a conv bias feeding batch norm: the mean subtraction cancels a
        // uniform channel shift exactly, so the true gradient is zero and the
        // probe sees nothing but rounding noise.
        ++res.n_skipped_zero;
        continue;
      }
      {  // smoothness probe: halving the step must not move the estimate
        p->value(r, c) = saved + static_cast<S>(cfg.step / 2);
        const double lp2 = loss_at();
        p->value(r, c) = saved - static_cast<S>(cfg.step / 2);
        const double lm2 = loss_at();
        p->value(r, c) = saved;
        const double numeric_half = (lp2 - lm2) / cfg.step;
        const double gap = std::abs(numeric - numeric_half);
        if (gap > std::max(1e-8, 1e-4 * std::max(std::abs(numeric), std::abs(numeric_half)))) {
          ++res.n_skipped_kink;
          continue;
        }
      }
      const double denom = std::max({std::abs(analytic), std::abs(numeric), kFloor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++res.n_checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = GradCheckEntry{p->name, r, c, analytic, numeric, rel};
      }
    }
  }
  net.freeze_dropout_masks(false);
  if (matched_tensors == 0)
    throw ValidationError("grad_check matched no parameter tensors (filter: '" +
                          cfg.name_filter + "')");
  return res;
}

}  // namespace semg

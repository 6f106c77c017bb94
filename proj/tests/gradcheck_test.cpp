#include "semg/gradcheck.hpp"

#include <gtest/gtest.h>

using namespace semg;

namespace {

Batch<double> random_input(int ch, int len, int n, std::uint64_t seed) {
  Rng rng(seed);
  Batch<double> b;
  b.channels = ch;
  b.length = len;
  b.batch = n;
  b.data.resize(ch, static_cast<Eigen::Index>(len) * n);
  for (Eigen::Index r = 0; r < b.data.rows(); ++r)
    for (Eigen::Index c = 0; c < b.data.cols(); ++c) b.data(r, c) = rng.normal();
  return b;
}

std::vector<int> random_labels(int n, int n_classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> l(static_cast<size_t>(n));
  for (auto& x : l) x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_classes)));
  return l;
}

}  // namespace

TEST(GradCheck, ToyLinearModelIsTight) {
  NetworkSpec s;
  s.in_channels = 8;
  s.in_length = 1;
  s.layers = {LayerSpec{LayerKind::FullyConnected, 8, 5, 0, 0}};
  auto net = Network<double>::build(s, 3);
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 45;  // checks every weight and bias
  auto res = grad_check(net, random_input(8, 1, 6, 11), random_labels(6, 5, 12), cfg);
  EXPECT_EQ(res.n_checked, 45);
  EXPECT_LT(res.max_rel_err, 1e-7);
}

TEST(GradCheck, SmallMixedStackChecksOut) {
  NetworkSpec s;
  s.in_channels = 3;
  s.in_length = 12;
  s.layers = {
      LayerSpec{LayerKind::Conv1d, 3, 5, 3, 0},
      LayerSpec{LayerKind::BatchNorm, 5, 0, 0, 0},
      LayerSpec{LayerKind::ReLU},
      LayerSpec{LayerKind::LocallyConnected, 5, 4, 1, 0},
      LayerSpec{LayerKind::BatchNorm, 4, 0, 0, 0},
      LayerSpec{LayerKind::ReLU},
      LayerSpec{LayerKind::Flatten},
      LayerSpec{LayerKind::FullyConnected, 40, 6, 0, 0},
  };
  auto net = Network<double>::build(s, 5);
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 30;
  auto res = grad_check(net, random_input(3, 12, 5, 21), random_labels(5, 6, 22), cfg);
  EXPECT_LT(res.max_rel_err, 1e-6) << res.worst.tensor << " analytic " << res.worst.analytic
                                   << " numeric " << res.worst.numeric;
}

TEST(GradCheck, WideKernelLocallyConnectedChecksOut) {
  NetworkSpec s;
  s.in_channels = 2;
  s.in_length = 9;
  s.layers = {
      LayerSpec{LayerKind::LocallyConnected, 2, 3, 3, 0},
      LayerSpec{LayerKind::ReLU},
      LayerSpec{LayerKind::Flatten},
      LayerSpec{LayerKind::FullyConnected, 21, 4, 0, 0},
  };
  auto net = Network<double>::build(s, 6);
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 40;
  auto res = grad_check(net, random_input(2, 9, 4, 31), random_labels(4, 4, 32), cfg);
  EXPECT_LT(res.max_rel_err, 1e-7);
}

// The full architecture in double precision, dropout removed: every layer's
// backward participates. This is the bound the training engine must honor.
TEST(GradCheck, FullArchitectureWithoutDropout) {
  auto net = Network<double>::build(gesture_net_spec(false), 17);
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 8;
  cfg.seed = 2024;
  auto res = grad_check(net, random_input(4, 75, 4, 41), random_labels(4, 6, 42), cfg);
  // 29 tensors x 8 probes + all 6 logit biases; biases that feed batch norm
  // are zero/zero skips, and the odd probe can straddle a ReLU boundary.
  EXPECT_EQ(res.n_checked + res.n_skipped_zero + res.n_skipped_kink, 238);
  EXPECT_GT(res.n_checked, 150);
  EXPECT_LT(res.max_rel_err, 1e-4) << res.worst.tensor << "(" << res.worst.row << ","
                                   << res.worst.col << ") analytic " << res.worst.analytic
                                   << " numeric " << res.worst.numeric;
}

TEST(GradCheck, FullArchitectureWithFrozenDropoutMask) {
  auto net = Network<double>::build(gesture_net_spec(true), 18);
  net.reseed_dropout(555);
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 8;
  cfg.seed = 2025;
  auto res = grad_check(net, random_input(4, 75, 4, 51), random_labels(4, 6, 52), cfg);
  EXPECT_LT(res.max_rel_err, 1e-4) << res.worst.tensor;
}

TEST(GradCheck, LayerFilterRestrictsScope) {
  auto net = Network<double>::build(gesture_net_spec(false), 19);
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 6;
  cfg.name_filter = "conv1";
  auto res = grad_check(net, random_input(4, 75, 3, 61), random_labels(3, 6, 62), cfg);
  // conv1.weight probes compare; conv1.bias feeds batch norm, whose mean
  // subtraction cancels a uniform shift, so those probes are zero/zero skips.
  EXPECT_EQ(res.n_checked + res.n_skipped_kink, 6);
  EXPECT_GE(res.n_checked, 5);
  EXPECT_EQ(res.n_skipped_zero, 6);
  EXPECT_LT(res.max_rel_err, 1e-5);
  cfg.name_filter = "no_such_layer";
  EXPECT_THROW(grad_check(net, random_input(4, 75, 3, 61), random_labels(3, 6, 62), cfg),
               ValidationError);
}

// A probe whose +-h interval brackets a ReLU boundary measures the average of
// two one-sided slopes. The harness must recognize and exclude it, not let it
// masquerade as a gradient bug.
TEST(GradCheck, FlagsProbesThatStraddleAReluBoundary) {
  NetworkSpec s;
  s.in_channels = 1;
  s.in_length = 1;
  s.layers = {
      LayerSpec{LayerKind::FullyConnected, 1, 1, 0, 0},
      LayerSpec{LayerKind::ReLU},
      LayerSpec{LayerKind::FullyConnected, 1, 2, 0, 0},
  };
  auto net = Network<double>::build(s, 31);
  auto params = net.params();
  params[0]->value(0, 0) = 1.0;                 // fc1.weight
  params[1]->value(0, 0) = -1.0 + 1e-5 / 3.0;   // first sample's pre-activation = h/3
  params[2]->value << 1.0, -1.0;                // fc2.weight
  params[3]->value.setZero();
  Batch<double> in;
  in.channels = 1;
  in.length = 1;
  in.batch = 2;
  in.data.resize(1, 2);
  in.data << 1.0, 2.0;  // second sample sits far from the boundary
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 10;  // touches every entry
  auto res = grad_check(net, in, {0, 1}, cfg);
  // Perturbing fc1's weight or bias sweeps sample 1 across zero; the two
  // fc2 tensors leave pre-activations alone and stay smooth.
  EXPECT_EQ(res.n_skipped_kink, 2);
  EXPECT_EQ(res.n_checked, 4);
  EXPECT_LT(res.max_rel_err, 1e-6);
}

// Negative control: a corrupted analytic gradient must blow the bound.
TEST(GradCheck, CorruptedBackwardFailsTheBound) {
  NetworkSpec s;
  s.in_channels = 6;
  s.in_length = 1;
  s.layers = {LayerSpec{LayerKind::FullyConnected, 6, 4, 0, 0}};
  auto net = Network<double>::build(s, 23);
  GradCheckConfig cfg;
  cfg.samples_per_tensor = 24;
  cfg.corrupt_factor = 1.5;
  auto res = grad_check(net, random_input(6, 1, 5, 71), random_labels(5, 4, 72), cfg);
  EXPECT_GT(res.max_rel_err, 1e-4);
  EXPECT_GT(res.max_rel_err, 0.2);  // ~1/3 expected
}

TEST(GradCheck, ReportsWorstOffender) {
  NetworkSpec s;
  s.in_channels = 4;
  s.in_length = 1;
  s.layers = {LayerSpec{LayerKind::FullyConnected, 4, 3, 0, 0}};
  auto net = Network<double>::build(s, 29);
  GradCheckConfig cfg;
  cfg.corrupt_factor = 2.0;
  auto res = grad_check(net, random_input(4, 1, 4, 81), random_labels(4, 3, 82), cfg);
  EXPECT_EQ(res.worst.tensor, "fc1.weight");
  EXPECT_NEAR(res.worst.rel_err, res.max_rel_err, 1e-15);
}

#include "semg/signal_sim.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>

using namespace semg;

namespace {

GestureProtocol tiny_protocol() {
  GestureProtocol p;
  p.n_repetitions = 2;
  p.contraction_s = 0.5;
  p.rest_s = 0.5;
  return p;
}

}  // namespace

TEST(MuapKernel, ShapeAndNormalization) {
  auto k = biphasic_kernel(500.0);
  EXPECT_EQ(k.samples.size(), 5u);  // 10 ms at 500 Hz
  double peak = 0;
  bool has_pos = false, has_neg = false;
  for (double v : k.samples) {
    peak = std::max(peak, std::abs(v));
    has_pos |= v > 0.1;
    has_neg |= v < -0.1;
  }
  EXPECT_NEAR(peak, 1.0, 1e-12);
  EXPECT_TRUE(has_pos);
  EXPECT_TRUE(has_neg);  // biphasic
  EXPECT_THROW(biphasic_kernel(0.0), ValidationError);
  EXPECT_THROW(biphasic_kernel(100.0, 0.001), ValidationError);  // < 2 samples
}

// Oracle: brute-force double loop over firings x kernel taps.
TEST(MuaptWaveform, MatchesBruteForceSuperposition) {
  MotorUnit u;
  u.kernel = biphasic_kernel(500.0);
  u.firing_times_s = {0.010, 0.013, 0.050, 0.0504, 0.120};  // includes overlap + off-grid
  u.channel_gain = {1.0, 0.5, 0.25, 0.0};
  u.amplitude = 0.8;
  const int n = 80;
  auto out = muapt_waveform(u, n, 500.0);

  Matrixd expect = Matrixd::Zero(kNumChannels, n);
  for (double t : u.firing_times_s) {
    const long long start = std::llround(t * 500.0);
    for (size_t j = 0; j < u.kernel.samples.size(); ++j) {
      const long long idx = start + static_cast<long long>(j);
      if (idx < 0 || idx >= n) continue;
      for (int c = 0; c < kNumChannels; ++c)
        expect(c, idx) += u.amplitude * u.channel_gain[static_cast<size_t>(c)] * u.kernel.samples[j];
    }
  }
  EXPECT_LT((out - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MuaptWaveform, SuperpositionIsExactlyLinearInFirings) {
  MotorUnit a, b, both;
  a.kernel = b.kernel = both.kernel = biphasic_kernel(500.0);
  a.firing_times_s = {0.01, 0.05};
  b.firing_times_s = {0.02, 0.051};
  both.firing_times_s = {0.01, 0.05, 0.02, 0.051};
  const int n = 60;
  Matrixd sum = muapt_waveform(a, n, 500.0) + muapt_waveform(b, n, 500.0);
  Matrixd joint = muapt_waveform(both, n, 500.0);
  EXPECT_EQ((sum - joint).cwiseAbs().maxCoeff(), 0.0);  // identical fp operations
}

TEST(MuaptWaveform, RejectsSampleRateMismatch) {
  MotorUnit u;
  u.kernel = biphasic_kernel(1000.0);
  EXPECT_THROW(muapt_waveform(u, 10, 500.0), ValidationError);
}

TEST(Protocol, SessionLengthFormula) {
  GestureProtocol p;  // defaults: 10 reps, 3 s + 3 s
  EXPECT_EQ(session_sample_count(p, 500.0), 180000);
  EXPECT_EQ(session_sample_count(tiny_protocol(), 500.0), 6000);
  GestureProtocol bad = p;
  bad.n_repetitions = 0;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = p;
  bad.contraction_s = 0;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = p;
  bad.force_level = -1;
  EXPECT_THROW(validate(bad), ValidationError);
}

TEST(SynthSession, LabelTimelineHasExactBlockLengths) {
  auto rec = synth_session({1, 1, 1}, tiny_protocol(), default_model(), 16, 7);
  ASSERT_EQ(rec.n_samples(), 6000);
  // 0.5 s at 500 Hz = 250 samples per contraction, 2 reps per class.
  std::array<int, kNumClasses> counts{};
  for (uint8_t l : rec.labels) counts[l]++;
  for (int g = 1; g < kNumClasses; ++g) EXPECT_EQ(counts[static_cast<size_t>(g)], 500) << g;
  EXPECT_EQ(counts[0], 6000 - 5 * 500);
}

TEST(SynthSession, DeterministicAndSeedSensitive) {
  const auto proto = tiny_protocol();
  auto a = synth_session({2, 3, 2}, proto, default_model(), 16, 11);
  auto b = synth_session({2, 3, 2}, proto, default_model(), 16, 11);
  auto c = synth_session({2, 3, 2}, proto, default_model(), 16, 12);
  EXPECT_EQ((a.channels - b.channels).cwiseAbs().maxCoeff(), 0.0f);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_GT((a.channels - c.channels).cwiseAbs().maxCoeff(), 0.0f);
}

TEST(SynthSession, SamplesStayInsideFrontendSpan) {
  auto rec = synth_session({1, 1, 4}, tiny_protocol(), default_model(), 24, 3);
  EXPECT_GT(rec.channels.minCoeff(), 0.0f);
  EXPECT_LT(rec.channels.maxCoeff(), 3.3f);
}

// Each posture is a separate recording of the same (subject, day): session p
// equals apply_posture of the premix synthesized with recording index p, and
// different postures draw genuinely different realizations (not just a remix
// of the same one).
TEST(SynthSession, EachPostureIsAnIndependentRecording) {
  const auto proto = tiny_protocol();
  const auto model = default_model();
  std::vector<uint8_t> labels1;
  Matrixd prem1 = synth_premix(4, 2, 1, proto, model, 16, 99, kDefaultSampleRate, &labels1);
  for (int p = 1; p <= 4; ++p) {
    std::vector<uint8_t> labels;
    Matrixd prem = synth_premix(4, 2, p, proto, model, 16, 99, kDefaultSampleRate, &labels);
    auto rec = synth_session({4, 2, p}, proto, model, 16, 99);
    Matrixf expect = apply_posture(prem, model, p);
    EXPECT_EQ((rec.channels - expect).cwiseAbs().maxCoeff(), 0.0f) << "posture " << p;
    EXPECT_EQ(rec.labels, labels);
    EXPECT_EQ(rec.labels, labels1);  // the timeline is protocol-determined
    if (p > 1)  // fresh firing/noise draws: remixing recording 1 must not match
      EXPECT_GT((rec.channels - apply_posture(prem1, model, p)).cwiseAbs().maxCoeff(), 0.05f);
  }
}

// The posture transform itself: reconstruct a premix from its identity-mixed
// session through the inverse output map, re-apply posture 3's matrix, and
// compare against apply_posture on the true premix.
TEST(SynthSession, PostureTransformIsTheDocumentedMixAndMap) {
  const auto proto = tiny_protocol();
  const auto model = default_model();
  Matrixd premix = synth_premix(5, 1, 1, proto, model, 16, 21);
  Matrixf s1 = apply_posture(premix, model, 1);  // posture 1 mixes by identity
  Matrixf s3 = apply_posture(premix, model, 3);
  Matrixd premix_rec(kNumChannels, premix.cols());
  for (int c = 0; c < kNumChannels; ++c)
    for (Eigen::Index i = 0; i < premix.cols(); ++i) {
      const double v = (static_cast<double>(s1(c, i)) - 1.65) / 1.65;
      premix_rec(c, i) = model.output_ref * std::atanh(std::min(0.999999, std::max(-0.999999, v)));
    }
  Matrixf rebuilt = apply_posture(premix_rec, model, 3);
  EXPECT_LT((rebuilt - s3).cwiseAbs().maxCoeff(), 5e-3f);
  // and the mix is not a no-op
  EXPECT_GT((s1 - s3).cwiseAbs().maxCoeff(), 0.05f);
}

// With variability switched off, each gesture class shows a distinct
// channel-power signature aligned with its recruitment pattern.
TEST(SynthSession, ClassChannelPowerSignaturesAreSeparable) {
  GestureProtocol proto = tiny_protocol();
  proto.n_repetitions = 4;
  SourceVariabilityModel model = default_model();
  model.adaptation0 = 0.0;
  model.day_gain_scale = 0.0;
  model.day_offset_scale = 0.0;
  model.noise_std = 0.005;
  std::vector<uint8_t> labels;
  Matrixd premix = synth_premix(1, 1, 1, proto, model, 32, 5, kDefaultSampleRate, &labels);

  std::array<std::array<double, kNumChannels>, kNumClasses> power{};
  std::array<int, kNumClasses> count{};
  for (int i = 0; i < premix.cols(); ++i) {
    const int g = labels[static_cast<size_t>(i)];
    count[static_cast<size_t>(g)]++;
    for (int c = 0; c < kNumChannels; ++c)
      power[static_cast<size_t>(g)][static_cast<size_t>(c)] += premix(c, i) * premix(c, i);
  }
  std::array<std::array<double, kNumChannels>, kNumClasses> sig{};
  for (int g = 0; g < kNumClasses; ++g) {
    double mx = 0;
    for (int c = 0; c < kNumChannels; ++c) {
      sig[static_cast<size_t>(g)][static_cast<size_t>(c)] =
          power[static_cast<size_t>(g)][static_cast<size_t>(c)] / count[static_cast<size_t>(g)];
      mx = std::max(mx, sig[static_cast<size_t>(g)][static_cast<size_t>(c)]);
    }
    if (g > 0)
      for (int c = 0; c < kNumChannels; ++c) sig[static_cast<size_t>(g)][static_cast<size_t>(c)] /= mx;
  }
  // rest is close to the noise floor: orders of magnitude below any gesture
  for (int c = 0; c < kNumChannels; ++c) EXPECT_LT(sig[0][static_cast<size_t>(c)], 1e-2);
  // every gesture pair differs by a clear margin in some channel
  const double kMargin = 0.2;
  for (int g = 1; g < kNumClasses; ++g) {
    // dominant channel matches the recruitment pattern's argmax
    const auto& pat = class_recruitment_pattern(g);
    int arg_sig = 0, arg_pat = 0;
    for (int c = 1; c < kNumChannels; ++c) {
      if (sig[static_cast<size_t>(g)][static_cast<size_t>(c)] > sig[static_cast<size_t>(g)][static_cast<size_t>(arg_sig)]) arg_sig = c;
      if (pat[static_cast<size_t>(c)] > pat[static_cast<size_t>(arg_pat)]) arg_pat = c;
    }
    EXPECT_EQ(arg_sig, arg_pat) << "class " << g;
    for (int h = g + 1; h < kNumClasses; ++h) {
      double linf = 0;
      for (int c = 0; c < kNumChannels; ++c)
        linf = std::max(linf, std::abs(sig[static_cast<size_t>(g)][static_cast<size_t>(c)] -
                                       sig[static_cast<size_t>(h)][static_cast<size_t>(c)]));
      EXPECT_GT(linf, kMargin) << "classes " << g << " vs " << h;
    }
  }
}

TEST(VariabilityModel, AdaptationScaleIsNonIncreasing) {
  auto model = default_model();
  for (int d = 1; d < 8; ++d)
    EXPECT_GE(model.adaptation_scale(d), model.adaptation_scale(d + 1));
  EXPECT_THROW(model.adaptation_scale(0), ValidationError);
}

TEST(VariabilityModel, Validation) {
  auto m = default_model();
  m.adaptation_decay = 1.5;
  EXPECT_THROW(validate(m), ValidationError);
  m = default_model();
  m.posture_mix.clear();
  EXPECT_THROW(validate(m), ValidationError);
  m = default_model();
  m.output_ref = 0;
  EXPECT_THROW(validate(m), ValidationError);
}

TEST(SynthSession, RejectsBadArguments) {
  const auto proto = tiny_protocol();
  const auto model = default_model();
  EXPECT_THROW(synth_session({1, 1, 1}, proto, model, 0, 1), ValidationError);   // empty pool
  EXPECT_THROW(synth_session({1, 1, 5}, proto, model, 8, 1), ValidationError);   // unknown posture
  EXPECT_THROW(synth_session({0, 1, 1}, proto, model, 8, 1), ValidationError);   // bad subject
}

TEST(ExportDataset, WritesSessionsAndManifest) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "semg_export_test";
  fs::remove_all(dir);
  DatasetSpec spec;
  spec.subjects = {1, 2};
  spec.days = {1};
  spec.postures = {1, 2};
  spec.protocol = tiny_protocol();
  spec.pool_size = 8;
  spec.seed = 42;
  auto manifest = export_dataset(spec, dir);
  EXPECT_EQ(manifest.entries.size(), 4u);
  auto loaded = load_manifest(dir / "manifest.csv");
  ASSERT_EQ(loaded.entries.size(), 4u);
  for (const auto& e : loaded.entries) {
    auto rec = load_session(dir / e.file);
    EXPECT_EQ(rec.source, e.source);
    EXPECT_EQ(static_cast<uint64_t>(rec.n_samples()), e.n_samples);
  }
  // same spec regenerates byte-identical sessions
  auto rec_a = load_session(dir / "s1_d1_p2.semg");
  export_dataset(spec, dir);
  auto rec_b = load_session(dir / "s1_d1_p2.semg");
  EXPECT_EQ((rec_a.channels - rec_b.channels).cwiseAbs().maxCoeff(), 0.0f);
  fs::remove_all(dir);
}

#pragma once

// Synthetic surface-EMG session generator.
//
// A session is built from a pool of motor units. Each unit fires as a renewal
// point process whose rate tracks the active gesture class, and every firing
// adds one copy of a short biphasic kernel to the unit's channels (linear
// superposition). On top of that raw mixture the generator layers the
// controlled variability the recognition experiments need:
//   * subject: per-unit channel gains / amplitudes (anatomy), fixed over days
//   * day: per-channel gain/offset drift (electrode placement) plus execution
//     noise that decays with the day index (user adaptation)
//   * posture: a fixed 4x4 channel mixing matrix applied to the premix
// Everything upstream of the posture mix (the "premix") depends only on
// (subject, day, seed), so sessions of the same subject+day at different
// postures are exact transforms of one shared premix.
//
// The final output map squashes each sample into the (0, 3.3) volt span of a
// typical 4-channel armband frontend.

#include "semg/common.hpp"
#include "semg/rng.hpp"
#include "semg/session_io.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

namespace semg {

inline constexpr double kDefaultSampleRate = 500.0;  // Hz

struct MuapKernel {
  std::vector<double> samples;
  double sample_rate = kDefaultSampleRate;
};

// Single-period damped sinusoid, peak-normalized to 1.
inline MuapKernel biphasic_kernel(double sample_rate, double period_s = 0.010,
                                  double decay_s = 0.003) {
  if (sample_rate <= 0) throw ValidationError("kernel sample_rate must be positive");
  if (period_s <= 0 || decay_s <= 0)
    throw ValidationError("kernel period/decay must be positive");
  const int n = static_cast<int>(std::llround(period_s * sample_rate));
  if (n < 2) throw ValidationError("kernel support must cover at least 2 samples");
  MuapKernel k;
  k.sample_rate = sample_rate;
  k.samples.resize(static_cast<size_t>(n));
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i / sample_rate;
    k.samples[static_cast<size_t>(i)] =
        std::sin(2.0 * M_PI * t / period_s) * std::exp(-t / decay_s);
    peak = std::max(peak, std::abs(k.samples[static_cast<size_t>(i)]));
  }
  for (double& v : k.samples) v /= peak;
  return k;
}

struct MotorUnit {
  MuapKernel kernel;
  std::vector<double> firing_times_s;           // absolute, seconds
  std::array<double, kNumChannels> channel_gain{1, 1, 1, 1};
  double amplitude = 1.0;
};

// u(t) = sum_i h(t - t_i), projected onto channels by gain * amplitude.
// Kernel sample rate must equal fs so the superposition is an exact
// integer-shift addition.
inline Matrixd muapt_waveform(const MotorUnit& unit, int n_samples, double fs) {
  if (fs <= 0) throw ValidationError("fs must be positive");
  if (n_samples < 0) throw ValidationError("n_samples must be >= 0");
  if (unit.kernel.sample_rate != fs)
    throw ValidationError("kernel sample_rate does not match session fs");
  Matrixd out = Matrixd::Zero(kNumChannels, n_samples);
  const int klen = static_cast<int>(unit.kernel.samples.size());
  for (double t : unit.firing_times_s) {
    const long long start = std::llround(t * fs);
    for (int j = 0; j < klen; ++j) {
      const long long idx = start + j;
      if (idx < 0 || idx >= n_samples) continue;
      const double v = unit.amplitude * unit.kernel.samples[static_cast<size_t>(j)];
      for (int c = 0; c < kNumChannels; ++c)
        out(c, static_cast<Eigen::Index>(idx)) += unit.channel_gain[static_cast<size_t>(c)] * v;
    }
  }
  return out;
}

struct GestureProtocol {
  int n_repetitions = 10;
  double contraction_s = 3.0;
  double rest_s = 3.0;
  double force_level = 1.0;  // scales firing rate and per-firing amplitude
};

inline void validate(const GestureProtocol& p) {
  if (p.n_repetitions < 1) throw ValidationError("GestureProtocol.n_repetitions must be >= 1");
  if (p.contraction_s <= 0) throw ValidationError("GestureProtocol.contraction_s must be positive");
  if (p.rest_s <= 0) throw ValidationError("GestureProtocol.rest_s must be positive");
  if (p.force_level <= 0) throw ValidationError("GestureProtocol.force_level must be positive");
}

inline int session_sample_count(const GestureProtocol& p, double fs) {
  return static_cast<int>(std::llround(static_cast<double>(kNumClasses) * p.n_repetitions *
                                       (p.contraction_s + p.rest_s) * fs));
}

// How strongly each gesture class recruits units preferring each channel.
// Class 0 is rest: nothing fires. The remaining rows are chosen so every pair
// of classes differs clearly in at least one channel's drive.
inline const std::array<double, kNumChannels>& class_recruitment_pattern(int cls) {
  static const std::array<std::array<double, kNumChannels>, kNumClasses> table = {{
      {0.00, 0.00, 0.00, 0.00},
      {1.00, 0.30, 0.15, 0.10},
      {0.15, 1.00, 0.30, 0.10},
      {0.10, 0.25, 1.00, 0.35},
      {0.30, 0.10, 0.25, 1.00},
      {0.75, 0.70, 0.15, 0.60},
  }};
  if (cls < 0 || cls >= kNumClasses) throw ValidationError("class id out of range");
  return table[static_cast<size_t>(cls)];
}

struct SourceVariabilityModel {
  // One 4x4 channel-mixing matrix per posture (index p-1). Posture 1 should
  // stay the identity; see default_model().
  std::vector<Eigen::Matrix4d> posture_mix;

  // Per-day electrode drift: channel gains ~ exp(day_gain_scale * N(0,1)),
  // offsets ~ day_offset_scale * N(0,1), redrawn i.i.d. per (subject, day).
  double day_gain_scale = 0.35;
  double day_offset_scale = 0.04;

  // Execution-noise multiplier for day d: adaptation0 * adaptation_decay^(d-1).
  double adaptation0 = 0.35;
  double adaptation_decay = 0.70;

  double base_rate_hz = 18.0;   // peak per-unit firing rate at force 1
  double cross_talk = 0.25;     // gain of non-preferred channels
  double noise_std = 0.03;      // additive sensor noise, premix units
  double output_ref = 1.0;      // tanh scale of the output map
  std::uint64_t subject_seed = 0;  // extra salt for subject-level draws

  double adaptation_scale(int day) const {
    if (day < 1) throw ValidationError("day must be >= 1");
    return adaptation0 * std::pow(adaptation_decay, day - 1);
  }
};

inline Eigen::Matrix4d posture_rotation(double angle01, double angle23) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = std::cos(angle01);
  m(0, 1) = -std::sin(angle01);
  m(1, 0) = std::sin(angle01);
  m(1, 1) = std::cos(angle01);
  m(2, 2) = std::cos(angle23);
  m(2, 3) = -std::sin(angle23);
  m(3, 2) = std::sin(angle23);
  m(3, 3) = std::cos(angle23);
  return m;
}

// Default model with n_postures mixing matrices: posture p rotates channel
// pairs (1,2) and (3,4) by (p-1) steps of `angle_step` radians.
inline SourceVariabilityModel default_model(int n_postures = 4, double angle_step = 0.22) {
  if (n_postures < 1) throw ValidationError("n_postures must be >= 1");
  SourceVariabilityModel m;
  m.posture_mix.reserve(static_cast<size_t>(n_postures));
  for (int p = 1; p <= n_postures; ++p)
    m.posture_mix.push_back(posture_rotation((p - 1) * angle_step, (p - 1) * 0.7 * angle_step));
  return m;
}

inline void validate(const SourceVariabilityModel& m) {
  if (m.posture_mix.empty()) throw ValidationError("model.posture_mix must not be empty");
  if (m.day_gain_scale < 0 || m.day_offset_scale < 0)
    throw ValidationError("model day drift scales must be >= 0");
  if (m.adaptation0 < 0) throw ValidationError("model.adaptation0 must be >= 0");
  if (m.adaptation_decay <= 0 || m.adaptation_decay > 1)
    throw ValidationError("model.adaptation_decay must be in (0, 1]");
  if (m.base_rate_hz <= 0) throw ValidationError("model.base_rate_hz must be positive");
  if (m.noise_std < 0) throw ValidationError("model.noise_std must be >= 0");
  if (m.output_ref <= 0) throw ValidationError("model.output_ref must be positive");
}

namespace detail {

struct Segment {
  int cls = 0;
  int rep = 0;
  int start = 0;  // sample index, inclusive
  int end = 0;    // exclusive
  bool contraction = false;
};

inline std::vector<Segment> session_timeline(const GestureProtocol& p, double fs,
                                             std::vector<uint8_t>* labels_out) {
  const int n = session_sample_count(p, fs);
  std::vector<Segment> segs;
  double t = 0.0;
  for (int cls = 0; cls < kNumClasses; ++cls) {
    for (int rep = 0; rep < p.n_repetitions; ++rep) {
      Segment c{cls, rep, 0, 0, true};
      c.start = static_cast<int>(std::llround(t * fs));
      t += p.contraction_s;
      c.end = std::min(n, static_cast<int>(std::llround(t * fs)));
      segs.push_back(c);
      Segment r{0, rep, 0, 0, false};  // rests are labeled class 0
      r.start = c.end;
      t += p.rest_s;
      r.end = std::min(n, static_cast<int>(std::llround(t * fs)));
      segs.push_back(r);
    }
  }
  segs.back().end = n;
  if (labels_out) {
    labels_out->assign(static_cast<size_t>(n), 0);
    for (const auto& s : segs)
      for (int i = s.start; i < s.end; ++i)
        (*labels_out)[static_cast<size_t>(i)] = static_cast<uint8_t>(s.contraction ? s.cls : 0);
  }
  return segs;
}

}  // namespace detail

// One recording's signal before the posture mixing matrix and output map:
// motor-unit superposition with subject anatomy, day drift, execution noise
// and sensor noise. kNumChannels x n_samples, doubles.
//
// `recording` distinguishes repeated captures within the same (subject, day):
// each posture is recorded separately, so firing times, execution multipliers
// and sensor noise are fresh draws per recording. Subject anatomy and the
// day's electrode drift are shared across recordings of that (subject, day).
inline Matrixd synth_premix(int subject, int day, int recording, const GestureProtocol& proto,
                            const SourceVariabilityModel& model, int pool_size,
                            std::uint64_t seed, double fs = kDefaultSampleRate,
                            std::vector<uint8_t>* labels_out = nullptr) {
  validate(proto);
  validate(model);
  if (subject < 1) throw ValidationError("subject must be >= 1");
  if (day < 1) throw ValidationError("day must be >= 1");
  if (recording < 1) throw ValidationError("recording must be >= 1");
  if (pool_size < 1) throw ValidationError("pool_size must be >= 1");
  if (fs <= 0) throw ValidationError("fs must be positive");

  const auto segs = detail::session_timeline(proto, fs, labels_out);
  const int n = session_sample_count(proto, fs);
  const MuapKernel kernel = biphasic_kernel(fs);
  const int klen = static_cast<int>(kernel.samples.size());
  const std::uint64_t salt = model.subject_seed;
  const std::uint64_t rec_seed =
      derive_seed(seed, "recording", static_cast<std::uint64_t>(subject),
                  static_cast<std::uint64_t>(day), static_cast<std::uint64_t>(recording), salt);

  // Subject anatomy: per-unit channel gains and amplitudes, stable over days.
  struct Unit {
    int pref;
    std::array<double, kNumChannels> gain;
    double amp;
  };
  std::vector<Unit> units(static_cast<size_t>(pool_size));
  for (int u = 0; u < pool_size; ++u) {
    Rng rng(derive_seed(seed, "unit", static_cast<std::uint64_t>(subject),
                        static_cast<std::uint64_t>(u), salt));
    Unit& un = units[static_cast<size_t>(u)];
    un.pref = u % kNumChannels;
    for (int c = 0; c < kNumChannels; ++c) {
      const double base = (c == un.pref) ? 1.0 : model.cross_talk;
      un.gain[static_cast<size_t>(c)] = base * rng.uniform(0.8, 1.2);
    }
    un.amp = std::exp(0.2 * rng.normal()) / std::sqrt(static_cast<double>(pool_size));
  }

  // Execution noise: one multiplier per (class, repetition, channel group),
  // scaled by the day's adaptation factor. Fresh per recording.
  const double adapt = model.adaptation_scale(day);
  std::vector<double> exec(static_cast<size_t>(kNumClasses) * proto.n_repetitions * kNumChannels);
  {
    Rng rng(derive_seed(rec_seed, "exec"));
    for (double& e : exec) e = std::max(0.05, 1.0 + adapt * rng.normal());
  }
  auto exec_at = [&](int cls, int rep, int ch) {
    return exec[static_cast<size_t>((cls * proto.n_repetitions + rep) * kNumChannels + ch)];
  };

  Matrixd premix = Matrixd::Zero(kNumChannels, n);
  const double F = proto.force_level;

  for (int u = 0; u < pool_size; ++u) {
    const Unit& un = units[static_cast<size_t>(u)];
    Rng rng(derive_seed(rec_seed, "fire", static_cast<std::uint64_t>(u)));
    for (const auto& seg : segs) {
      if (!seg.contraction || seg.cls == 0) continue;
      const double w = class_recruitment_pattern(seg.cls)[static_cast<size_t>(un.pref)];
      const double rate = model.base_rate_hz * F * w * exec_at(seg.cls, seg.rep, un.pref);
      if (rate < 1e-6) continue;
      double t = seg.start / fs + rng.uniform(0.0, 1.0 / rate);
      const double t_end = seg.end / fs;
      while (t < t_end) {
        const long long start = std::llround(t * fs);
        const double a = un.amp * F * rng.uniform(0.9, 1.1);
        for (int j = 0; j < klen; ++j) {
          const long long idx = start + j;
          if (idx < 0 || idx >= n) break;
          const double v = a * kernel.samples[static_cast<size_t>(j)];
          for (int c = 0; c < kNumChannels; ++c)
            premix(c, static_cast<Eigen::Index>(idx)) += un.gain[static_cast<size_t>(c)] * v;
        }
        t += (1.0 / rate) * rng.uniform(0.75, 1.25);
      }
    }
  }

  // Day drift: per-channel gain/offset, then sensor noise.
  {
    Rng rng(derive_seed(seed, "drift", static_cast<std::uint64_t>(subject),
                        static_cast<std::uint64_t>(day), salt));
    for (int c = 0; c < kNumChannels; ++c) {
      const double g = std::exp(model.day_gain_scale * rng.normal());
      const double o = model.day_offset_scale * rng.normal();
      premix.row(c) = g * premix.row(c).array() + o;
    }
  }
  if (model.noise_std > 0) {
    Rng rng(derive_seed(rec_seed, "noise"));
    for (Eigen::Index i = 0; i < premix.cols(); ++i)
      for (int c = 0; c < kNumChannels; ++c)
        premix(c, i) += model.noise_std * rng.normal();
  }
  return premix;
}

// Maps a mixed premix sample into the (0, 3.3) V frontend span.
inline double output_map(double v, double output_ref) {
  return 1.65 + 1.65 * std::tanh(v / output_ref);
}

// Applies posture mixing + output map to a premix. Exposed so tests can check
// the mixing contract against a premix they synthesized themselves.
inline Matrixf apply_posture(const Matrixd& premix, const SourceVariabilityModel& model,
                             int posture) {
  if (posture < 1 || static_cast<size_t>(posture) > model.posture_mix.size())
    throw ValidationError("posture id has no mixing matrix in the model");
  const Eigen::Matrix4d& mix = model.posture_mix[static_cast<size_t>(posture - 1)];
  Matrixd mixed = mix * premix;
  Matrixf out(kNumChannels, premix.cols());
  for (Eigen::Index i = 0; i < mixed.cols(); ++i)
    for (int c = 0; c < kNumChannels; ++c)
      out(c, i) = static_cast<float>(output_map(mixed(c, i), model.output_ref));
  return out;
}

inline SessionRecording synth_session(const SourceId& id, const GestureProtocol& proto,
                                      const SourceVariabilityModel& model, int pool_size,
                                      std::uint64_t seed, double fs = kDefaultSampleRate) {
  validate(id);
  SessionRecording rec;
  rec.source = id;
  rec.fs = fs;
  Matrixd premix =
      synth_premix(id.subject, id.day, id.posture, proto, model, pool_size, seed, fs, &rec.labels);
  rec.channels = apply_posture(premix, model, id.posture);
  validate(rec);
  return rec;
}

struct DatasetSpec {
  std::vector<int> subjects = {1, 2, 3, 4, 5, 6, 7};
  std::vector<int> days = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> postures = {1, 2, 3, 4};
  GestureProtocol protocol;
  SourceVariabilityModel model = default_model();
  int pool_size = 60;
  double fs = kDefaultSampleRate;
  std::uint64_t seed = 1;
};

// Synthesizes every (subject, day, posture) combination into out_dir and
// writes manifest.csv. Returns the manifest.
inline Manifest export_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.subjects.empty() || spec.days.empty() || spec.postures.empty())
    throw ValidationError("DatasetSpec subject/day/posture lists must be non-empty");
  std::filesystem::create_directories(out_dir);
  Manifest manifest;
  for (int s : spec.subjects) {
    for (int d : spec.days) {
      for (int p : spec.postures) {
        SessionRecording rec =
            synth_session(SourceId{s, d, p}, spec.protocol, spec.model, spec.pool_size,
                          spec.seed, spec.fs);
        const std::string fname = to_string(rec.source) + ".semg";
        write_session(rec, out_dir / fname);
        manifest.entries.push_back(ManifestEntry{rec.source, fname, rec.fs,
                                                 static_cast<uint64_t>(rec.n_samples())});
      }
    }
  }
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace semg

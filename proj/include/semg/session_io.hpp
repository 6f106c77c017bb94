#pragma once

// Recording container + on-disk formats.
//
// Session file layout (little-endian, fixed-width):
//   magic   8 bytes  "SEMGSES1"
//   u32     subject, day, posture   (1-based)
//   f64     sample rate [Hz]
//   u32     n_channels (currently always 4)
//   u64     n_samples
//   then n_samples records of { f32 ch[n_channels]; u8 label; }
//
// A dataset directory holds one such file per source plus manifest.csv with
// columns subject,day,posture,file,fs,n_samples.

#include "semg/binary_io.hpp"
#include "semg/common.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace semg {

struct SourceId {
  int subject = 1;  // 1-based
  int day = 1;
  int posture = 1;

  friend bool operator==(const SourceId&, const SourceId&) = default;
  friend auto operator<=>(const SourceId&, const SourceId&) = default;
};

inline std::string to_string(const SourceId& s) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "s%d_d%d_p%d", s.subject, s.day, s.posture);
  return buf;
}

inline void validate(const SourceId& s) {
  if (s.subject < 1) throw ValidationError("SourceId.subject must be >= 1");
  if (s.day < 1) throw ValidationError("SourceId.day must be >= 1");
  if (s.posture < 1) throw ValidationError("SourceId.posture must be >= 1");
}

struct SessionRecording {
  SourceId source;
  double fs = 500.0;
  Matrixf channels;             // kNumChannels x n_samples
  std::vector<uint8_t> labels;  // per sample, 0 .. kNumClasses-1

  int n_samples() const { return static_cast<int>(channels.cols()); }
};

inline void validate(const SessionRecording& rec) {
  validate(rec.source);
  if (rec.fs <= 0.0) throw ValidationError("SessionRecording.fs must be positive");
  if (rec.channels.rows() != kNumChannels)
    throw ValidationError("SessionRecording.channels must have " +
                          std::to_string(kNumChannels) + " rows");
  if (static_cast<size_t>(rec.channels.cols()) != rec.labels.size())
    throw ValidationError("SessionRecording.labels length must match channel samples");
  for (uint8_t l : rec.labels)
    if (l >= kNumClasses)
      throw ValidationError("SessionRecording.labels contains class id >= " +
                            std::to_string(kNumClasses));
}

namespace detail {
inline constexpr char kSessionMagic[8] = {'S', 'E', 'M', 'G', 'S', 'E', 'S', '1'};
}  // namespace detail

inline void write_session(const SessionRecording& rec, const std::filesystem::path& path) {
  validate(rec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(detail::kSessionMagic, sizeof(detail::kSessionMagic));
  detail::put<uint32_t>(os, static_cast<uint32_t>(rec.source.subject));
  detail::put<uint32_t>(os, static_cast<uint32_t>(rec.source.day));
  detail::put<uint32_t>(os, static_cast<uint32_t>(rec.source.posture));
  detail::put<double>(os, rec.fs);
  detail::put<uint32_t>(os, static_cast<uint32_t>(kNumChannels));
  detail::put<uint64_t>(os, static_cast<uint64_t>(rec.channels.cols()));
  const int n = rec.n_samples();
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < kNumChannels; ++c) detail::put<float>(os, rec.channels(c, i));
    detail::put<uint8_t>(os, rec.labels[static_cast<size_t>(i)]);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline SessionRecording load_session(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open session file: " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::kSessionMagic, 8) != 0)
    throw IoError("bad magic in session file: " + path.string());
  SessionRecording rec;
  rec.source.subject = static_cast<int>(detail::get<uint32_t>(is, "subject"));
  rec.source.day = static_cast<int>(detail::get<uint32_t>(is, "day"));
  rec.source.posture = static_cast<int>(detail::get<uint32_t>(is, "posture"));
  rec.fs = detail::get<double>(is, "fs");
  const auto n_ch = detail::get<uint32_t>(is, "n_channels");
  if (n_ch != kNumChannels)
    throw IoError("session file n_channels=" + std::to_string(n_ch) + ", expected " +
                  std::to_string(kNumChannels) + ": " + path.string());
  const auto n = detail::get<uint64_t>(is, "n_samples");
  rec.channels.resize(kNumChannels, static_cast<Eigen::Index>(n));
  rec.labels.resize(n);
  for (uint64_t i = 0; i < n; ++i) {
    for (int c = 0; c < kNumChannels; ++c)
      rec.channels(c, static_cast<Eigen::Index>(i)) = detail::get<float>(is, "sample");
    rec.labels[i] = detail::get<uint8_t>(is, "label");
  }
  validate(rec);
  return rec;
}

// ---- manifest ----

struct ManifestEntry {
  SourceId source;
  std::string file;  // relative to the manifest's directory
  double fs = 500.0;
  uint64_t n_samples = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(const SourceId& id) const {
    for (const auto& e : entries)
      if (e.source == id) return &e;
    return nullptr;
  }
};

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "subject,day,posture,file,fs,n_samples\n";
  for (const auto& e : m.entries) {
    os << e.source.subject << ',' << e.source.day << ',' << e.source.posture << ','
       << e.file << ',' << e.fs << ',' << e.n_samples << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest: " + path.string());
  Manifest m;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty manifest: " + path.string());
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (cols.size() != 6)
      throw IoError("manifest line " + std::to_string(lineno) + ": expected 6 columns");
    ManifestEntry e;
    try {
      e.source.subject = std::stoi(cols[0]);
      e.source.day = std::stoi(cols[1]);
      e.source.posture = std::stoi(cols[2]);
      e.file = cols[3];
      e.fs = std::stod(cols[4]);
      e.n_samples = std::stoull(cols[5]);
    } catch (const std::exception&) {
      throw IoError("manifest line " + std::to_string(lineno) + ": parse error");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

// Import adapter for plain CSV recordings: header then rows
// time,ch1,ch2,ch3,ch4,label. fs is inferred from the first two time stamps.
inline SessionRecording load_session_csv(const std::filesystem::path& path, SourceId id) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open csv: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty csv: " + path.string());
  std::vector<std::array<float, kNumChannels>> rows;
  std::vector<uint8_t> labels;
  std::vector<double> times;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (cols.size() != 2 + kNumChannels)
      throw IoError("csv line " + std::to_string(lineno) + ": expected " +
                    std::to_string(2 + kNumChannels) + " columns");
    try {
      times.push_back(std::stod(cols[0]));
      std::array<float, kNumChannels> r{};
      for (int c = 0; c < kNumChannels; ++c) r[static_cast<size_t>(c)] = std::stof(cols[1 + c]);
      rows.push_back(r);
      const int lab = std::stoi(cols[1 + kNumChannels]);
      if (lab < 0 || lab >= kNumClasses)
        throw ValidationError("csv line " + std::to_string(lineno) + ": label out of range");
      labels.push_back(static_cast<uint8_t>(lab));
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw IoError("csv line " + std::to_string(lineno) + ": parse error");
    }
  }
  if (rows.size() < 2) throw IoError("csv has fewer than 2 samples: " + path.string());
  SessionRecording rec;
  rec.source = id;
  const double dt = times[1] - times[0];
  if (dt <= 0) throw ValidationError("csv time column must be strictly increasing");
  rec.fs = 1.0 / dt;
  rec.channels.resize(kNumChannels, static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < kNumChannels; ++c)
      rec.channels(c, static_cast<Eigen::Index>(i)) = rows[i][static_cast<size_t>(c)];
  rec.labels = std::move(labels);
  validate(rec);
  return rec;
}

}  // namespace semg

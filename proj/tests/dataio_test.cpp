#include "semg/session_io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace semg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto d = fs::temp_directory_path() / "semg_dataio_test";
  fs::create_directories(d);
  return d;
}

SessionRecording small_session() {
  SessionRecording rec;
  rec.source = {3, 5, 2};
  rec.fs = 500.0;
  rec.channels.resize(kNumChannels, 10);
  for (int c = 0; c < kNumChannels; ++c)
    for (int i = 0; i < 10; ++i) rec.channels(c, i) = 0.001f * static_cast<float>(c * 100 + i);
  rec.labels = {0, 0, 1, 1, 1, 2, 2, 0, 5, 5};
  return rec;
}

}  // namespace

TEST(SessionIo, RoundTripIsBitExact) {
  const auto path = temp_dir() / "roundtrip.semg";
  auto rec = small_session();
  write_session(rec, path);
  auto back = load_session(path);
  EXPECT_EQ(back.source, rec.source);
  EXPECT_EQ(back.fs, rec.fs);
  ASSERT_EQ(back.channels.cols(), rec.channels.cols());
  for (int c = 0; c < kNumChannels; ++c)
    for (int i = 0; i < rec.n_samples(); ++i)
      EXPECT_EQ(back.channels(c, i), rec.channels(c, i));  // exact float compare on purpose
  EXPECT_EQ(back.labels, rec.labels);
}

TEST(SessionIo, RejectsBadMagic) {
  const auto path = temp_dir() / "badmagic.semg";
  std::ofstream os(path, std::ios::binary);
  os << "NOTSEMG!garbagegarbage";
  os.close();
  EXPECT_THROW(load_session(path), IoError);
}

TEST(SessionIo, RejectsTruncatedFile) {
  const auto path = temp_dir() / "trunc.semg";
  write_session(small_session(), path);
  const auto full = fs::file_size(path);
  fs::resize_file(path, full - 7);
  EXPECT_THROW(load_session(path), IoError);
}

TEST(SessionIo, RejectsOutOfRangeLabelOnWrite) {
  auto rec = small_session();
  rec.labels[3] = 6;
  EXPECT_THROW(write_session(rec, temp_dir() / "badlabel.semg"), ValidationError);
}

TEST(SessionIo, ValidatesSourceIds) {
  auto rec = small_session();
  rec.source.subject = 0;
  EXPECT_THROW(validate(rec), ValidationError);
}

TEST(Manifest, RoundTrip) {
  Manifest m;
  m.entries.push_back({{1, 2, 3}, "s1_d2_p3.semg", 500.0, 18000});
  m.entries.push_back({{2, 1, 1}, "s2_d1_p1.semg", 500.0, 18000});
  const auto path = temp_dir() / "manifest.csv";
  write_manifest(m, path);
  auto back = load_manifest(path);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].source, (SourceId{1, 2, 3}));
  EXPECT_EQ(back.entries[0].file, "s1_d2_p3.semg");
  EXPECT_EQ(back.entries[1].n_samples, 18000u);
  EXPECT_NE(back.find({2, 1, 1}), nullptr);
  EXPECT_EQ(back.find({9, 9, 9}), nullptr);
}

TEST(Manifest, RejectsMalformedRow) {
  const auto path = temp_dir() / "bad_manifest.csv";
  std::ofstream os(path);
  os << "subject,day,posture,file,fs,n_samples\n1,2\n";
  os.close();
  EXPECT_THROW(load_manifest(path), IoError);
}

TEST(CsvImport, ParsesPlainRecording) {
  const auto path = temp_dir() / "rec.csv";
  std::ofstream os(path);
  os << "time,ch1,ch2,ch3,ch4,label\n";
  for (int i = 0; i < 8; ++i) {
    os << (i * 0.002) << ',' << (0.1 * i) << ",0.5,1.0,2.0," << (i < 4 ? 0 : 3) << "\n";
  }
  os.close();
  auto rec = load_session_csv(path, {1, 1, 1});
  EXPECT_NEAR(rec.fs, 500.0, 1e-9);
  ASSERT_EQ(rec.n_samples(), 8);
  EXPECT_FLOAT_EQ(rec.channels(0, 3), 0.3f);
  EXPECT_EQ(rec.labels[7], 3);
}

TEST(CsvImport, RejectsBadLabel) {
  const auto path = temp_dir() / "rec_bad.csv";
  std::ofstream os(path);
  os << "time,ch1,ch2,ch3,ch4,label\n0,0,0,0,0,0\n0.002,0,0,0,0,9\n";
  os.close();
  EXPECT_THROW(load_session_csv(path, {1, 1, 1}), ValidationError);
}

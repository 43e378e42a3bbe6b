#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "attnshift/synthgen.hpp"
#include "attnshift/spectral.hpp"

using namespace attnshift;

namespace {

GenConfig small_config(std::uint64_t seed = 1) {
  GenConfig c;
  c.n_subjects = 3;
  c.seed = seed;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("attnshift_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Synthgen, DefaultShapes) {
  GenConfig c;
  const auto sets = generate(c);
  ASSERT_EQ(sets.size(), 15u);
  for (const auto& ts : sets) {
    EXPECT_GE(ts.trials.size(), 40u);
    EXPECT_LE(ts.trials.size(), 120u);
    EXPECT_EQ(ts.n_channels, 64u);
    EXPECT_EQ(ts.n_samples, 384u);
    std::size_t tcsi = 0;
    for (const auto& t : ts.trials) {
      EXPECT_EQ(t.data.size(), 64u * 384u);
      tcsi += t.label == Label::TCSI;
    }
    EXPECT_GE(tcsi, 2u);
    EXPECT_GE(ts.trials.size() - tcsi, 2u);
  }
}

TEST(Synthgen, Deterministic) {
  EXPECT_EQ(generate(small_config(7)), generate(small_config(7)));
  EXPECT_NE(generate(small_config(7)), generate(small_config(8)));
}

TEST(Synthgen, WorkerCountDoesNotChangeOutput) { EXPECT_EQ(generate(small_config(3), 1), generate(small_config(3), 4)); }

TEST(Synthgen, RejectsInvalidConfig) {
  GenConfig c;
  c.class_balance = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.fs = 60;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.duration_s = 1.501;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.separability = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Synthgen, SignaturesDifferAcrossSubjectsUnlessShared) {
  GenConfig c;
  EXPECT_NE(draw_signature(c, 0), draw_signature(c, 1));
  EXPECT_EQ(draw_signature(c, 0).size(), 4u);
  c.shared_signature = true;
  EXPECT_EQ(draw_signature(c, 0), draw_signature(c, 5));
  c.planted = {{3, Band::Gamma, 1}};
  EXPECT_EQ(draw_signature(c, 2), c.planted);
}

TEST(Synthgen, CodecRoundTrip) {
  const auto ts = generate(small_config())[0];
  const auto path = (temp_dir("codec") / "s.eegb").string();
  write_trialset(path, ts);
  EXPECT_EQ(read_trialset(path), ts);
}

TEST(Synthgen, BadMagic) {
  auto bytes = encode_trialset(generate(small_config())[0]);
  bytes[0] = 'X';
  try {
    decode_trialset(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
}

TEST(Synthgen, TruncatedPayloadReportsCounts) {
  auto bytes = encode_trialset(generate(small_config())[0]);
  bytes.resize(bytes.size() - 10);
  try {
    decode_trialset(bytes);
    FAIL();
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected"), std::string::npos) << msg;
    EXPECT_NE(msg.find("got"), std::string::npos) << msg;
  }
}

TEST(Synthgen, BadShapeFieldIsNamed) {
  auto bytes = encode_trialset(generate(small_config())[0]);
  // n_channels sits after magic (4), version (2) and n_trials (4).
  bytes[10] = 32;
  try {
    decode_trialset(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("n_channels"), std::string::npos) << e.what();
  }
}

TEST(Synthgen, DatasetDirectoryRoundTrip) {
  const auto sets = generate(small_config());
  const auto dir = temp_dir("dataset");
  write_dataset(dir, sets, to_json(small_config()));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_EQ(read_dataset(dir), sets);
}

// Pink background: band-aggregated power falls with frequency.
TEST(Synthgen, PinkNoiseSpectrumDecreases) {
  std::mt19937_64 rng(11);
  const std::size_t n = 384;
  std::array<double, kNumBands> power{};
  const StftConfig cfg;
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = pink_noise(n, 256.0, rng);
    const auto t = band_power(std::span<const double>(x), 1, 256.0, cfg);
    for (std::size_t b = 0; b < kNumBands; ++b) power[b] += time_avg_topography(t, kBands[b].band)[0];
  }
  for (std::size_t b = 1; b < kNumBands; ++b) EXPECT_LT(power[b], power[b - 1]) << kBands[b].name;
}

TEST(Synthgen, ClassBalanceIsRespected) {
  GenConfig c = small_config();
  c.class_balance = 0.25;
  for (const auto& ts : generate(c)) {
    std::size_t tcsi = 0;
    for (auto l : ts.labels()) tcsi += l == Label::TCSI;
    const double frac = static_cast<double>(tcsi) / static_cast<double>(ts.trials.size());
    EXPECT_NEAR(frac, 0.25, 0.02);
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "attnshift/spectral.hpp"

using namespace attnshift;

TEST(Spectral, BandTable) {
  EXPECT_EQ(kBands[0].lo_hz, 4.0);
  EXPECT_EQ(kBands[0].hi_hz, 7.0);
  EXPECT_EQ(kBands[1].lo_hz, 8.0);
  EXPECT_EQ(kBands[1].hi_hz, 12.0);
  EXPECT_EQ(kBands[2].lo_hz, 13.0);
  EXPECT_EQ(kBands[2].hi_hz, 20.0);
  EXPECT_EQ(kBands[3].lo_hz, 20.0);
  EXPECT_EQ(kBands[3].hi_hz, 30.0);
  EXPECT_EQ(kBands[4].lo_hz, 30.0);
  EXPECT_EQ(kBands[4].hi_hz, 40.0);
  EXPECT_EQ(parse_band("lowbeta"), Band::LowBeta);
  EXPECT_EQ(parse_band("High_Beta"), Band::HighBeta);
  EXPECT_THROW(parse_band("delta"), UnknownLabelError);
}

TEST(Spectral, FrameCount) {
  EXPECT_EQ(stft_frame_count(384, 64, 32), 11u);
  EXPECT_THROW(stft_frame_count(63, 64, 32), ConfigError);
  for (std::size_t n = 64; n < 600; n += 7)
    for (std::size_t hop : {1u, 5u, 16u, 32u}) {
      const auto f = stft_frame_count(n, 64, hop);
      EXPECT_LE((f - 1) * hop + 64, n);
      EXPECT_GT(f * hop + 64, n);
    }
}

TEST(Spectral, HalfOpenBins) {
  // 4 Hz resolution: 20 Hz belongs to high beta only.
  const auto lb = band_bins(kBands[2], 256.0, 64);
  const auto hb = band_bins(kBands[3], 256.0, 64);
  EXPECT_EQ(std::count(lb.begin(), lb.end(), 5u), 0);
  EXPECT_EQ(std::count(hb.begin(), hb.end(), 5u), 1);
  EXPECT_THROW(band_bins(kBands[4], 60.0, 64), ConfigError);
}

TEST(Spectral, SinusoidConcentratesInAlpha) {
  const double fs = 256.0;
  std::vector<double> x(384);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 10.0 * i / fs);
  const auto t = band_power(std::span<const double>(x), 1, fs);
  ASSERT_EQ(t.n_frames, 11u);
  for (std::size_t f = 0; f < t.n_frames; ++f) {
    const double alpha = t.at(1, 0, f);
    for (std::size_t b : {0u, 2u, 3u, 4u}) EXPECT_GT(alpha, 10.0 * t.at(b, 0, f)) << "band " << b << " frame " << f;
  }
}

TEST(Spectral, ZeroSignal) {
  std::vector<float> x(64 * 384, 0.0F);
  const auto t = band_power(std::span<const float>(x), 64, 256.0);
  for (double v : t.values) EXPECT_EQ(v, 0.0);
}

TEST(Spectral, FrameTimesInsidePreparatoryWindow) {
  std::vector<double> x(384, 1.0);
  const auto t = band_power(std::span<const double>(x), 1, 256.0);
  for (double ft : t.frame_times) {
    EXPECT_GE(ft, -2.0);
    EXPECT_LE(ft, -0.5);
  }
}

TEST(Spectral, QuadraticScaling) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> x(2 * 384), y(x.size());
  for (auto& v : x) v = nd(rng);
  const double a = 3.7;
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
  const auto tx = band_power(std::span<const double>(x), 2, 256.0);
  const auto ty = band_power(std::span<const double>(y), 2, 256.0);
  for (std::size_t i = 0; i < tx.values.size(); ++i)
    EXPECT_NEAR(ty.values[i], a * a * tx.values[i], 1e-9 * std::max(1.0, ty.values[i]));
}

// Sum over all one-sided bins equals the window-weighted mean square; on white
// noise that is within 5% of the plain mean square on average.
TEST(Spectral, ParsevalOnWhiteNoise) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const auto w = hann_window(64);
  double ratio_sum = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> frame(64);
    for (auto& v : frame) v = nd(rng);
    const auto p = frame_power_spectrum(frame, w);
    double total = 0.0, wms = 0.0, w2 = 0.0;
    for (double v : p) total += v;
    for (std::size_t i = 0; i < 64; ++i) {
      wms += w[i] * w[i] * frame[i] * frame[i];
      w2 += w[i] * w[i];
    }
    EXPECT_NEAR(total, wms / w2, 1e-9 * std::max(1.0, total));
    double ms = 0.0;
    for (double v : frame) ms += v * v;
    ratio_sum += total / (ms / 64.0);
  }
  EXPECT_NEAR(ratio_sum / reps, 1.0, 0.05);
}

TEST(Spectral, TopographyConstantAndSingleFrame) {
  BandPowerTensor t;
  t.n_channels = 3;
  t.n_frames = 4;
  t.values.assign(kNumBands * 3 * 4, 2.5);
  for (double v : time_avg_topography(t, "gamma")) EXPECT_EQ(v, 2.5);

  BandPowerTensor one;
  one.n_channels = 3;
  one.n_frames = 1;
  one.values = {0, 0, 0, 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(time_avg_topography(one, Band::Alpha), (std::vector<double>{1, 2, 3}));
  EXPECT_THROW(time_avg_topography(one, "delta"), UnknownLabelError);
}

TEST(Spectral, TopographyMatchesTwoLoopMean) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  BandPowerTensor t;
  t.n_channels = 64;
  t.n_frames = 11;
  t.values.resize(kNumBands * 64 * 11);
  for (auto& v : t.values) v = u(rng);
  const auto topo = time_avg_topography(t, Band::HighBeta);
  for (std::size_t c = 0; c < 64; ++c) {
    double s = 0.0;
    for (std::size_t f = 0; f < 11; ++f) s += t.values[(3 * 64 + c) * 11 + f];
    EXPECT_NEAR(topo[c], s / 11.0, 1e-12);
  }
}

TEST(Spectral, DumpRoundTrip) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::vector<double> x(4 * 384);
  for (auto& v : x) v = nd(rng);
  auto t = band_power(std::span<const double>(x), 4, 256.0);
  const auto path = (std::filesystem::temp_directory_path() / "attnshift_test_bpw.bin").string();
  write_band_power(path, t);
  const auto back = read_band_power(path);
  ASSERT_EQ(back.n_frames, t.n_frames);
  for (std::size_t i = 0; i < t.values.size(); ++i) EXPECT_FLOAT_EQ(back.values[i], t.values[i]);
}

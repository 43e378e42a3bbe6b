#pragma once

// Short-time band power over the five analysis bands.

#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnshift/common.hpp"
#include "attnshift/fft.hpp"
#include "attnshift/binio.hpp"

namespace attnshift {

enum class Band : std::uint8_t { Theta = 0, Alpha, LowBeta, HighBeta, Gamma };
inline constexpr std::size_t kNumBands = 5;

struct BandDef {
  Band band;
  const char* name;
  double lo_hz;
  double hi_hz;
};

inline constexpr std::array<BandDef, kNumBands> kBands{{
    {Band::Theta, "Theta", 4.0, 7.0},
    {Band::Alpha, "Alpha", 8.0, 12.0},
    {Band::LowBeta, "LowBeta", 13.0, 20.0},
    {Band::HighBeta, "HighBeta", 20.0, 30.0},
    {Band::Gamma, "Gamma", 30.0, 40.0},
}};

inline const BandDef& band_def(Band b) { return kBands[static_cast<std::size_t>(b)]; }
inline const char* band_name(Band b) { return band_def(b).name; }

// Case-insensitive; accepts "lowbeta", "LowBeta", "low_beta".
inline Band parse_band(std::string_view s) {
  std::string key;
  for (char c : s)
    if (c != '_' && c != '-' && c != ' ') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (const auto& b : kBands) {
    std::string n;
    for (const char* p = b.name; *p; ++p) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(*p))));
    if (n == key) return b.band;
  }
  throw UnknownLabelError("unknown band '" + std::string(s) + "'");
}

struct StftConfig {
  double window_s = 0.25;
  double hop_s = 0.125;
  // Time of the first sample relative to shift onset.
  double segment_start_s = -2.0;

  std::size_t window_samples(double fs) const { return static_cast<std::size_t>(std::lround(window_s * fs)); }
  std::size_t hop_samples(double fs) const { return static_cast<std::size_t>(std::lround(hop_s * fs)); }
};

inline std::size_t stft_frame_count(std::size_t n_samples, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0) throw ConfigError("STFT window and hop must be positive");
  if (n_samples < window) throw ConfigError("segment shorter than STFT window");
  return (n_samples - window) / hop + 1;
}

// Indexed (band, channel, frame), row-major.
struct BandPowerTensor {
  std::size_t n_bands = kNumBands;
  std::size_t n_channels = 0;
  std::size_t n_frames = 0;
  std::vector<double> values;
  std::vector<double> frame_times;
  double fs = 0.0;
  std::size_t window = 0;
  std::size_t hop = 0;

  double& at(std::size_t b, std::size_t c, std::size_t f) { return values[(b * n_channels + c) * n_frames + f]; }
  double at(std::size_t b, std::size_t c, std::size_t f) const { return values[(b * n_channels + c) * n_frames + f]; }

  std::span<const double> series(std::size_t b, std::size_t c) const {
    return {values.data() + (b * n_channels + c) * n_frames, n_frames};
  }

  bool operator==(const BandPowerTensor&) const = default;
};

// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

// FFT bins of a length-`window` transform whose centre frequency lies in [lo, hi).
inline std::vector<std::size_t> band_bins(const BandDef& band, double fs, std::size_t window) {
  if (band.hi_hz > fs / 2.0)
    throw ConfigError(std::string("band ") + band.name + " exceeds the Nyquist frequency");
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k <= window / 2; ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(window);
    if (f >= band.lo_hz && f < band.hi_hz) bins.push_back(k);
  }
  if (bins.empty())
    throw ConfigError(std::string("band ") + band.name + " contains no FFT bins at this resolution");
  return bins;
}

// One-sided power spectrum of a windowed frame, scaled so that the sum over all
// bins equals the window-weighted mean square of the frame.
inline std::vector<double> frame_power_spectrum(std::span<const double> frame, std::span<const double> window) {
  const std::size_t n = frame.size();
  std::vector<double> buf(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    buf[i] = frame[i] * window[i];
    wsum += window[i] * window[i];
  }
  const auto spec = fft::rfft(buf);
  std::vector<double> p(spec.size());
  const double norm = 1.0 / (static_cast<double>(n) * wsum);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    p[k] = (edge ? 1.0 : 2.0) * std::norm(spec[k]) * norm;
  }
  return p;
}

// data is channel-major: n_channels rows of n_samples each.
template <typename T>
BandPowerTensor band_power(std::span<const T> data, std::size_t n_channels, double fs, const StftConfig& cfg = {}) {
  if (n_channels == 0 || data.size() % n_channels != 0) throw DimensionError("trial data is not channels x samples");
  const std::size_t n_samples = data.size() / n_channels;
  const std::size_t window = cfg.window_samples(fs);
  const std::size_t hop = cfg.hop_samples(fs);
  const std::size_t frames = stft_frame_count(n_samples, window, hop);

  std::array<std::vector<std::size_t>, kNumBands> bins;
  for (std::size_t b = 0; b < kNumBands; ++b) bins[b] = band_bins(kBands[b], fs, window);

  BandPowerTensor t;
  t.n_channels = n_channels;
  t.n_frames = frames;
  t.fs = fs;
  t.window = window;
  t.hop = hop;
  t.values.assign(kNumBands * n_channels * frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f)
    t.frame_times.push_back(cfg.segment_start_s +
                            (static_cast<double>(f * hop) + static_cast<double>(window) / 2.0) / fs);

  const auto w = hann_window(window);
  std::vector<double> frame(window);
  for (std::size_t c = 0; c < n_channels; ++c) {
    const T* row = data.data() + c * n_samples;
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t i = 0; i < window; ++i) frame[i] = static_cast<double>(row[f * hop + i]);
      const auto p = frame_power_spectrum(frame, w);
      for (std::size_t b = 0; b < kNumBands; ++b) {
        double s = 0.0;
        for (auto k : bins[b]) s += p[k];
        t.at(b, c, f) = s / static_cast<double>(bins[b].size());
      }
    }
  }
  return t;
}

inline std::vector<double> time_avg_topography(const BandPowerTensor& t, Band band) {
  const auto b = static_cast<std::size_t>(band);
  if (b >= t.n_bands) throw UnknownLabelError("band index out of range");
  std::vector<double> out(t.n_channels, 0.0);
  for (std::size_t c = 0; c < t.n_channels; ++c) {
    double s = 0.0;
    for (double v : t.series(b, c)) s += v;
    out[c] = s / static_cast<double>(t.n_frames);
  }
  return out;
}

inline std::vector<double> time_avg_topography(const BandPowerTensor& t, std::string_view band_name) {
  return time_avg_topography(t, parse_band(band_name));
}

// Debug dump: "BPW1", u16 version, u16 bands, u16 channels, u32 frames, f32 fs,
// f32 frame times, then f32 values in (band, channel, frame) order.
inline void write_band_power(const std::string& path, const BandPowerTensor& t) {
  binio::Writer w;
  w.bytes("BPW1");
  w.u16(1);
  w.u16(static_cast<std::uint16_t>(t.n_bands));
  w.u16(static_cast<std::uint16_t>(t.n_channels));
  w.u32(static_cast<std::uint32_t>(t.n_frames));
  w.f32(static_cast<float>(t.fs));
  for (double v : t.frame_times) w.f32(static_cast<float>(v));
  for (double v : t.values) w.f32(static_cast<float>(v));
  w.save(path);
}

inline BandPowerTensor read_band_power(const std::string& path) {
  binio::Reader r(binio::load(path));
  r.magic("BPW1");
  if (r.u16("version") != 1) throw FormatError("unsupported version");
  BandPowerTensor t;
  t.n_bands = r.u16("n_bands");
  t.n_channels = r.u16("n_channels");
  t.n_frames = r.u32("n_frames");
  t.fs = r.f32("fs");
  r.expect_remaining((t.n_frames + t.n_bands * t.n_channels * t.n_frames) * 4);
  for (std::size_t f = 0; f < t.n_frames; ++f) t.frame_times.push_back(r.f32("frame_times"));
  t.values.resize(t.n_bands * t.n_channels * t.n_frames);
  for (auto& v : t.values) v = r.f32("values");
  return t;
}

}  // namespace attnshift

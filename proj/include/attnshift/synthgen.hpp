#pragma once

// Synthetic preparatory-window EEG: per-channel pink noise, a shared 10 Hz
// rhythm, and band-limited components whose amplitude carries a subject-private
// class signature in a few (ROI, band) cells.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/binio.hpp"
#include "attnshift/common.hpp"
#include "attnshift/fft.hpp"
#include "attnshift/montage.hpp"
#include "attnshift/spectral.hpp"

namespace attnshift {

struct SignatureEntry {
  std::size_t roi = 0;
  Band band = Band::Gamma;
  int sign = 1;  // +1: TCSI carries more power in this cell

  bool operator==(const SignatureEntry&) const = default;
};

struct GenConfig {
  std::size_t n_subjects = 15;
  std::size_t trials_min = 40;
  std::size_t trials_max = 120;
  double class_balance = 0.5;
  double fs = 256.0;
  double duration_s = 1.5;
  double separability = 0.3;
  std::size_t signature_size = 4;
  std::uint64_t seed = 1;
  // Every subject uses the same signature (positive control for cross-subject transfer).
  bool shared_signature = false;
  // Overrides the random draw for every subject when non-empty.
  std::vector<SignatureEntry> planted;
  // Broadband >= 20 Hz noise amplitude, relative to the band components; 0 disables.
  double artifact_noise = 0.0;

  std::size_t n_samples() const { return static_cast<std::size_t>(std::llround(duration_s * fs)); }

  void validate() const {
    if (n_subjects < 1) throw ConfigError("n_subjects must be >= 1");
    if (!(fs > 2.0 * 40.0)) throw ConfigError("fs must exceed 80 Hz to cover the gamma band");
    if (!(duration_s > 0.0) || std::abs(duration_s * fs - std::round(duration_s * fs)) > 1e-9)
      throw ConfigError("duration_s * fs must be a positive integer sample count");
    if (!(class_balance >= 0.0 && class_balance <= 1.0)) throw ConfigError("class_balance must lie in [0, 1]");
    if (!(separability >= 0.0)) throw ConfigError("separability must be >= 0");
    if (trials_min < 4 || trials_max < trials_min) throw ConfigError("trials range must satisfy 4 <= min <= max");
    if (signature_size > kNumRois * kNumBands) throw ConfigError("signature_size exceeds the ROI x band grid");
    if (!(artifact_noise >= 0.0)) throw ConfigError("artifact_noise must be >= 0");
    for (const auto& p : planted) {
      if (p.roi >= kNumRois) throw ConfigError("planted signature ROI out of range");
      if (p.sign != 1 && p.sign != -1) throw ConfigError("planted signature sign must be +1 or -1");
    }
  }
};

struct Trial {
  Label label = Label::EI;
  std::vector<float> data;  // channel-major, n_channels x n_samples

  bool operator==(const Trial&) const = default;
};

struct TrialSet {
  std::string subject_id;
  float fs = 256.0F;
  std::size_t n_channels = kNumChannels;
  std::size_t n_samples = 0;
  std::vector<Trial> trials;

  bool operator==(const TrialSet&) const = default;

  std::vector<Label> labels() const {
    std::vector<Label> out;
    out.reserve(trials.size());
    for (const auto& t : trials) out.push_back(t.label);
    return out;
  }
};

inline std::string subject_name(std::size_t s) {
  std::string n = std::to_string(s + 1);
  return "S" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

namespace detail {

inline std::vector<SignatureEntry> draw_signature_from(std::mt19937_64& rng, std::size_t size) {
  std::vector<std::size_t> cells(kNumRois * kNumBands);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<SignatureEntry> sig;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < size; ++i)
    sig.push_back({cells[i] / kNumBands, static_cast<Band>(cells[i] % kNumBands), coin(rng) ? 1 : -1});
  return sig;
}

// Per-bin amplitudes of the synthetic spectrum.
inline double pink_shape(double f_hz) { return 1.0 / std::sqrt(std::max(f_hz, 1.0)); }

inline constexpr double kScale = 10.0;
inline constexpr double kBandToPink = 1.5;  // band component amplitude relative to in-band pink
inline constexpr double kAlphaRhythm = 0.6;

}  // namespace detail

// Signature used for `subject`; deterministic in (config, subject).
inline std::vector<SignatureEntry> draw_signature(const GenConfig& cfg, std::size_t subject) {
  if (!cfg.planted.empty()) return cfg.planted;
  std::mt19937_64 rng(derive_seed(cfg.seed, cfg.shared_signature ? 0xFFFF'FFFFULL : subject, 0x5167));
  return detail::draw_signature_from(rng, cfg.signature_size);
}

// Unit-variance-per-bin white noise shaped by 1/sqrt(f), flat below 1 Hz.
inline std::vector<double> pink_noise(std::size_t n, double fs, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> white(n);
  for (auto& v : white) v = normal(rng);
  auto spec = fft::rfft(white);
  for (std::size_t k = 0; k < spec.size(); ++k)
    spec[k] *= detail::pink_shape(static_cast<double>(k) * fs / static_cast<double>(n));
  return fft::irfft(spec, n);
}

inline TrialSet generate_subject(const GenConfig& cfg, std::size_t subject) {
  cfg.validate();
  const std::size_t n = cfg.n_samples();
  const double fs = cfg.fs;
  const auto& montage = standard_montage();
  std::mt19937_64 rng(derive_seed(cfg.seed, subject, 0x7214));
  std::normal_distribution<double> normal;

  std::uniform_int_distribution<std::size_t> count_dist(cfg.trials_min, cfg.trials_max);
  const std::size_t n_trials = count_dist(rng);
  const auto n_tcsi = static_cast<std::size_t>(std::clamp<long long>(
      std::llround(cfg.class_balance * static_cast<double>(n_trials)), 2, static_cast<long long>(n_trials) - 2));
  std::vector<Label> labels(n_trials, Label::EI);
  std::fill_n(labels.begin(), n_tcsi, Label::TCSI);
  std::shuffle(labels.begin(), labels.end(), rng);

  const auto signature = draw_signature(cfg, subject);
  // Signed separability per (channel, band): TCSI amplitude x(1 + m), EI x(1 - m).
  std::vector<std::array<double, kNumBands>> modulation(kNumChannels);
  for (auto& m : modulation) m.fill(0.0);
  for (const auto& e : signature)
    for (auto c : montage.rois()[e.roi].channel_indices)
      modulation[c][static_cast<std::size_t>(e.band)] = e.sign * cfg.separability;

  // Map FFT bins of the full segment to bands.
  const std::size_t n_bins = n / 2 + 1;
  std::vector<int> bin_band(n_bins, -1);
  std::vector<double> bin_freq(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    bin_freq[k] = static_cast<double>(k) * fs / static_cast<double>(n);
    for (std::size_t b = 0; b < kNumBands; ++b)
      if (bin_freq[k] >= kBands[b].lo_hz && bin_freq[k] < kBands[b].hi_hz) bin_band[k] = static_cast<int>(b);
  }

  TrialSet ts;
  ts.subject_id = subject_name(subject);
  ts.fs = static_cast<float>(fs);
  ts.n_channels = kNumChannels;
  ts.n_samples = n;
  ts.trials.reserve(n_trials);

  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> alpha_amp(0.5, 1.5);
  std::vector<double> white(n);
  for (std::size_t t = 0; t < n_trials; ++t) {
    Trial trial;
    trial.label = labels[t];
    trial.data.resize(kNumChannels * n);
    const double class_sign = trial.label == Label::TCSI ? 1.0 : -1.0;
    const double phase = phase_dist(rng);
    const double rhythm = detail::kAlphaRhythm * alpha_amp(rng);

    for (std::size_t c = 0; c < kNumChannels; ++c) {
      for (auto& v : white) v = normal(rng);
      auto pink = fft::rfft(white);
      for (auto& v : white) v = normal(rng);
      const auto bandlim = fft::rfft(white);
      std::vector<std::complex<double>> artifact;
      if (cfg.artifact_noise > 0.0) {
        for (auto& v : white) v = normal(rng);
        artifact = fft::rfft(white);
      }

      std::vector<std::complex<double>> spec(n_bins);
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double shape = detail::pink_shape(bin_freq[k]);
        spec[k] = pink[k] * shape;
        if (bin_band[k] >= 0) {
          const double amp = detail::kBandToPink * shape *
                             (1.0 + class_sign * modulation[c][static_cast<std::size_t>(bin_band[k])]);
          spec[k] += bandlim[k] * amp;
        }
        if (!artifact.empty() && bin_freq[k] >= 20.0) spec[k] += artifact[k] * cfg.artifact_noise * shape;
      }
      const auto x = fft::irfft(spec, n);
      float* row = trial.data.data() + c * n;
      for (std::size_t i = 0; i < n; ++i) {
        const double tsec = static_cast<double>(i) / fs;
        const double alpha = rhythm * std::sin(2.0 * std::numbers::pi * 10.0 * tsec + phase);
        row[i] = static_cast<float>(detail::kScale * (x[i] + alpha));
      }
    }
    ts.trials.push_back(std::move(trial));
  }
  return ts;
}

inline std::vector<TrialSet> generate(const GenConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  std::vector<TrialSet> out(cfg.n_subjects);
  parallel_for(cfg.n_subjects, jobs, [&](std::size_t s) { out[s] = generate_subject(cfg, s); });
  return out;
}

// "EEGB" trial file: u16 version, u32 n_trials, u16 n_channels, u32 n_samples,
// f32 fs, u16-length-prefixed UTF-8 subject id; per trial a u8 label (0 = EI,
// 1 = TCSI) followed by channel-major f32 samples. All little-endian.
inline std::vector<char> encode_trialset(const TrialSet& ts) {
  binio::Writer w;
  w.bytes("EEGB");
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(ts.trials.size()));
  w.u16(static_cast<std::uint16_t>(ts.n_channels));
  w.u32(static_cast<std::uint32_t>(ts.n_samples));
  w.f32(ts.fs);
  w.u16(static_cast<std::uint16_t>(ts.subject_id.size()));
  w.bytes(ts.subject_id);
  for (const auto& t : ts.trials) {
    if (t.data.size() != ts.n_channels * ts.n_samples) throw DimensionError("trial shape does not match header");
    w.u8(static_cast<std::uint8_t>(t.label));
    for (float v : t.data) w.f32(v);
  }
  return w.data();
}

inline TrialSet decode_trialset(std::vector<char> bytes) {
  binio::Reader r(std::move(bytes));
  r.magic("EEGB");
  if (r.u16("version") != 1) throw FormatError("unsupported version (field 'version')");
  TrialSet ts;
  const std::uint32_t n_trials = r.u32("n_trials");
  ts.n_channels = r.u16("n_channels");
  ts.n_samples = r.u32("n_samples");
  ts.fs = r.f32("fs");
  if (ts.n_channels != kNumChannels) throw FormatError("bad field 'n_channels': expected 64");
  if (ts.n_samples == 0) throw FormatError("bad field 'n_samples': must be positive");
  if (!(ts.fs > 0.0F) || !std::isfinite(ts.fs)) throw FormatError("bad field 'fs'");
  const std::uint16_t id_len = r.u16("subject_id_length");
  ts.subject_id = r.str(id_len, "subject_id");
  const std::size_t per_trial = 1 + ts.n_channels * ts.n_samples * 4;
  r.expect_remaining(static_cast<std::size_t>(n_trials) * per_trial);
  ts.trials.resize(n_trials);
  for (auto& t : ts.trials) {
    const std::uint8_t label = r.u8("label");
    if (label > 1) throw FormatError("bad field 'label': " + std::to_string(label));
    t.label = static_cast<Label>(label);
    t.data.resize(ts.n_channels * ts.n_samples);
    for (auto& v : t.data) v = r.f32("samples");
  }
  return ts;
}

inline void write_trialset(const std::string& path, const TrialSet& ts) {
  const auto bytes = encode_trialset(ts);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline TrialSet read_trialset(const std::string& path) { return decode_trialset(binio::load(path)); }

inline nlohmann::json to_json(const GenConfig& c) {
  nlohmann::json planted = nlohmann::json::array();
  for (const auto& p : c.planted)
    planted.push_back({{"roi", standard_montage().rois()[p.roi].name}, {"band", band_name(p.band)}, {"sign", p.sign}});
  return {{"n_subjects", c.n_subjects},         {"trials_min", c.trials_min},
          {"trials_max", c.trials_max},         {"class_balance", c.class_balance},
          {"fs", c.fs},                         {"duration_s", c.duration_s},
          {"separability", c.separability},     {"signature_size", c.signature_size},
          {"seed", c.seed},                     {"shared_signature", c.shared_signature},
          {"planted", planted},                 {"artifact_noise", c.artifact_noise}};
}

// Dataset directory: one .eegb file per subject plus manifest.json.
inline void write_dataset(const std::filesystem::path& dir, const std::vector<TrialSet>& sets,
                          const nlohmann::json& provenance = nullptr) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  nlohmann::json manifest;
  manifest["format"] = "attnshift-dataset";
  manifest["version"] = 1;
  if (!provenance.is_null()) manifest["generator"] = provenance;
  auto& subjects = manifest["subjects"] = nlohmann::json::array();
  for (const auto& ts : sets) {
    const std::string file = ts.subject_id + ".eegb";
    write_trialset((dir / file).string(), ts);
    std::size_t n_tcsi = 0;
    for (const auto& t : ts.trials) n_tcsi += t.label == Label::TCSI;
    subjects.push_back({{"id", ts.subject_id}, {"file", file}, {"n_trials", ts.trials.size()},
                        {"n_tcsi", n_tcsi}, {"n_ei", ts.trials.size() - n_tcsi}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

inline std::vector<TrialSet> read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("missing manifest.json in '" + dir.string() + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  if (manifest.value("format", "") != "attnshift-dataset") throw FormatError("manifest.json: bad field 'format'");
  std::vector<TrialSet> out;
  for (const auto& s : manifest.at("subjects")) out.push_back(read_trialset((dir / s.at("file").get<std::string>()).string()));
  return out;
}

}  // namespace attnshift

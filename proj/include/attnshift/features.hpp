#pragma once

// Per-band feature pool (505 columns per band) in four categories: global
// statistics, intra-ROI spatial variability, intra-ROI temporal dynamics and
// inter-ROI relations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/binio.hpp"
#include "attnshift/common.hpp"
#include "attnshift/montage.hpp"
#include "attnshift/spectral.hpp"
#include "attnshift/stats.hpp"
#include "attnshift/synthgen.hpp"

namespace attnshift {

enum class Category : std::uint8_t { Global = 0, IntraRoiSpatial, IntraRoiTemporal, InterRoi };
inline constexpr std::size_t kNumCategories = 4;

enum class Subtype : std::uint8_t {
  GlobalLowOrder = 0,
  RoiSpatialSd,
  RoiSpatialRange,
  RoiLowOrder,
  RoiHighOrder,
  RoiWindowLowOrder,
  RoiTemporalDynamics,
  Connectivity,
  HemisphericAsymmetry,
  AnteriorPosteriorGradient,
};
inline constexpr std::size_t kNumSubtypes = 10;

inline const char* category_name(Category c) {
  static constexpr std::array<const char*, kNumCategories> names{"Global", "IntraRoiSpatial", "IntraRoiTemporal",
                                                                 "InterRoi"};
  return names[static_cast<std::size_t>(c)];
}

inline const char* subtype_name(Subtype s) {
  static constexpr std::array<const char*, kNumSubtypes> names{
      "global-low-order",      "roi-spatial-sd",        "roi-spatial-range", "roi-low-order",
      "roi-high-order",        "roi-window-low-order",  "roi-temporal-dynamics",
      "connectivity",          "hemispheric-asymmetry", "anterior-posterior-gradient"};
  return names[static_cast<std::size_t>(s)];
}

inline Category category_of(Subtype s) {
  switch (s) {
    case Subtype::GlobalLowOrder: return Category::Global;
    case Subtype::RoiSpatialSd:
    case Subtype::RoiSpatialRange:
    case Subtype::RoiLowOrder:
    case Subtype::RoiHighOrder: return Category::IntraRoiSpatial;
    case Subtype::RoiWindowLowOrder:
    case Subtype::RoiTemporalDynamics: return Category::IntraRoiTemporal;
    default: return Category::InterRoi;
  }
}

template <typename Enum, std::size_t N>
Enum parse_enum_name(const std::string& s, const char* (*namer)(Enum), const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (s == namer(static_cast<Enum>(i))) return static_cast<Enum>(i);
  throw FormatError(std::string("unknown ") + what + " '" + s + "'");
}

struct FeatureMeta {
  std::size_t id = 0;
  Band band = Band::Theta;
  Category category = Category::Global;
  Subtype subtype = Subtype::GlobalLowOrder;
  std::vector<std::size_t> rois;  // 0, 1 or 2 ROI indices
  std::string name;

  bool operator==(const FeatureMeta&) const = default;

  std::string describe() const { return std::string(band_name(band)) + " | " + name; }
};

inline constexpr std::size_t kGlobalPerBand = 8;
inline constexpr std::size_t kSpatialPerBand = kNumRois * 6 + kNumChannels;  // 160
inline constexpr std::size_t kTemporalPerBand = kNumRois * 13;               // 208
inline constexpr std::size_t kInterPerBand = kNumRois * (kNumRois - 1) / 2 + 7 + 2;  // 129
inline constexpr std::size_t kFeaturesPerBand = kGlobalPerBand + kSpatialPerBand + kTemporalPerBand + kInterPerBand;
inline constexpr std::size_t kSubWindows = 5;
inline constexpr double kAsymmetryEps = 1e-12;

// Either all five bands concatenated or one band.
struct BandSetting {
  bool multi = true;
  Band band = Band::Gamma;

  static BandSetting multi_band() { return {true, Band::Gamma}; }
  static BandSetting single(Band b) { return {false, b}; }

  std::vector<Band> bands() const {
    if (!multi) return {band};
    return {Band::Theta, Band::Alpha, Band::LowBeta, Band::HighBeta, Band::Gamma};
  }
  std::string to_string() const {
    if (multi) return "multi";
    std::string s = band_name(band);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  }
  static BandSetting parse(const std::string& s) {
    if (s == "multi") return multi_band();
    return single(parse_band(s));
  }
  bool operator==(const BandSetting&) const = default;
};

// Column descriptors for one band, ids starting at `offset`.
inline std::vector<FeatureMeta> band_feature_layout(Band band, std::size_t offset = 0) {
  const auto& m = standard_montage();
  std::vector<FeatureMeta> out;
  out.reserve(kFeaturesPerBand);
  auto add = [&](Subtype st, std::vector<std::size_t> rois, std::string name) {
    out.push_back({offset + out.size(), band, category_of(st), st, std::move(rois), std::move(name)});
  };
  for (const char* s : {"mean", "sd", "min", "max", "median", "iqr", "skewness", "kurtosis"})
    add(Subtype::GlobalLowOrder, {}, std::string("global ") + s);

  for (const auto& r : m.rois()) {
    add(Subtype::RoiSpatialSd, {r.index}, r.name + " spatial sd");
    add(Subtype::RoiSpatialRange, {r.index}, r.name + " spatial range");
    add(Subtype::RoiLowOrder, {r.index}, r.name + " spatial mean");
    add(Subtype::RoiLowOrder, {r.index}, r.name + " spatial variance");
    add(Subtype::RoiHighOrder, {r.index}, r.name + " spatial skewness");
    add(Subtype::RoiHighOrder, {r.index}, r.name + " spatial kurtosis");
  }
  for (const auto& c : m.channels())
    add(Subtype::RoiLowOrder, {m.roi_index_of_channel(c.index)}, c.label + " mean power");

  for (const auto& r : m.rois()) {
    for (std::size_t w = 0; w < kSubWindows; ++w)
      add(Subtype::RoiWindowLowOrder, {r.index}, r.name + " window " + std::to_string(w + 1) + " mean");
    for (std::size_t w = 0; w < kSubWindows; ++w)
      add(Subtype::RoiWindowLowOrder, {r.index}, r.name + " window " + std::to_string(w + 1) + " sd");
    add(Subtype::RoiTemporalDynamics, {r.index}, r.name + " slope");
    add(Subtype::RoiTemporalDynamics, {r.index}, r.name + " diff sd");
    add(Subtype::RoiTemporalDynamics, {r.index}, r.name + " peak time");
  }

  for (std::size_t i = 0; i < kNumRois; ++i)
    for (std::size_t j = i + 1; j < kNumRois; ++j)
      add(Subtype::Connectivity, {i, j}, "corr " + m.rois()[i].name + " ~ " + m.rois()[j].name);
  for (const auto& [l, r] : m.hemisphere_pairs())
    add(Subtype::HemisphericAsymmetry, {l, r}, m.rois()[l].group + " asymmetry");
  add(Subtype::AnteriorPosteriorGradient, {}, "anterior-posterior difference");
  add(Subtype::AnteriorPosteriorGradient, {}, "anterior-posterior normalized difference");
  return out;
}

inline std::vector<FeatureMeta> feature_layout(const BandSetting& setting) {
  std::vector<FeatureMeta> out;
  for (Band b : setting.bands()) {
    auto part = band_feature_layout(b, out.size());
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// Sub-window w of n frames: [floor(w n / 5), max(floor((w + 1) n / 5), start + 1)).
inline std::pair<std::size_t, std::size_t> sub_window(std::size_t w, std::size_t n) {
  const std::size_t start = std::min(w * n / kSubWindows, n - 1);
  const std::size_t end = std::max((w + 1) * n / kSubWindows, start + 1);
  return {start, end};
}

// Writes the 505 features of band `band` of `t` into `out`; returns the number of
// degenerate (flat-series) correlations per connectivity column via `degenerate`.
inline void extract_band_features(const BandPowerTensor& t, Band band, std::span<double> out,
                                  std::span<std::uint8_t> degenerate) {
  if (t.n_channels != kNumChannels) throw DimensionError("band power tensor must have 64 channels");
  if (out.size() != kFeaturesPerBand || degenerate.size() != kFeaturesPerBand)
    throw DimensionError("feature output span must hold 505 values");
  const auto& m = standard_montage();
  const std::size_t b = static_cast<std::size_t>(band);
  const std::size_t nf = t.n_frames;
  std::fill(degenerate.begin(), degenerate.end(), std::uint8_t{0});
  std::size_t k = 0;

  // Global over the full channel x frame matrix.
  {
    std::vector<double> all;
    all.reserve(kNumChannels * nf);
    for (std::size_t c = 0; c < kNumChannels; ++c)
      for (double v : t.series(b, c)) all.push_back(v);
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    out[k++] = stats::mean(all);
    out[k++] = stats::sd(all);
    out[k++] = sorted.front();
    out[k++] = sorted.back();
    out[k++] = stats::quantile_sorted(sorted, 0.5);
    out[k++] = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
    out[k++] = stats::skewness(all);
    out[k++] = stats::kurtosis(all);
  }

  std::array<double, kNumChannels> chan_avg{};
  for (std::size_t c = 0; c < kNumChannels; ++c) chan_avg[c] = stats::mean(t.series(b, c));

  std::array<std::vector<double>, kNumRois> roi_series;
  std::array<double, kNumRois> roi_power{};
  for (const auto& r : m.rois()) {
    auto& s = roi_series[r.index];
    s.assign(nf, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
      std::array<double, kChannelsPerRoi> v{};
      for (std::size_t q = 0; q < kChannelsPerRoi; ++q) v[q] = t.at(b, r.channel_indices[q], f);
      s[f] = stats::mean(v);
    }
    roi_power[r.index] = stats::mean(s);
  }

  for (const auto& r : m.rois()) {
    std::array<double, kChannelsPerRoi> v{};
    for (std::size_t q = 0; q < kChannelsPerRoi; ++q) v[q] = chan_avg[r.channel_indices[q]];
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    out[k++] = stats::sd(v);
    out[k++] = *hi - *lo;
    out[k++] = stats::mean(v);
    out[k++] = stats::variance(v);
    out[k++] = stats::skewness(v);
    out[k++] = stats::kurtosis(v);
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) out[k++] = chan_avg[c];

  for (const auto& r : m.rois()) {
    const std::span<const double> s = roi_series[r.index];
    for (std::size_t w = 0; w < kSubWindows; ++w) {
      const auto [a, e] = sub_window(w, nf);
      out[k++] = stats::mean(s.subspan(a, e - a));
    }
    for (std::size_t w = 0; w < kSubWindows; ++w) {
      const auto [a, e] = sub_window(w, nf);
      out[k++] = stats::sd(s.subspan(a, e - a));
    }
    out[k++] = stats::slope(s);
    std::vector<double> diffs;
    for (std::size_t f = 1; f < nf; ++f) diffs.push_back(s[f] - s[f - 1]);
    out[k++] = stats::sd(diffs);
    const auto peak = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    out[k++] = nf > 1 ? static_cast<double>(peak) / static_cast<double>(nf - 1) : 0.0;
  }

  for (std::size_t i = 0; i < kNumRois; ++i)
    for (std::size_t j = i + 1; j < kNumRois; ++j) {
      const auto p = stats::pearson(roi_series[i], roi_series[j]);
      degenerate[k] = p.degenerate ? 1 : 0;
      out[k++] = p.r;
    }
  for (const auto& [l, r] : m.hemisphere_pairs())
    out[k++] = (roi_power[l] - roi_power[r]) / (roi_power[l] + roi_power[r] + kAsymmetryEps);

  double ant = 0.0, post = 0.0;
  std::size_t n_ant = 0, n_post = 0;
  for (const auto& r : m.rois()) {
    if (r.anteriority == Anteriority::Anterior) {
      ant += roi_power[r.index];
      ++n_ant;
    } else if (r.anteriority == Anteriority::Posterior) {
      post += roi_power[r.index];
      ++n_post;
    }
  }
  ant /= static_cast<double>(n_ant);
  post /= static_cast<double>(n_post);
  out[k++] = ant - post;
  out[k++] = (ant - post) / (ant + post + kAsymmetryEps);
}

struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;  // row-major
  std::vector<FeatureMeta> metas;
  std::vector<Label> labels;
  BandSetting setting;
  // Per column: number of rows whose correlation hit the flat-series fallback.
  std::vector<std::uint32_t> degenerate_counts;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_cols, n_cols}; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_cols + j]; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) c[i] = at(i, j);
    return c;
  }

  // Rows `rows` and columns `cols`, metadata carried along (ids keep their original values).
  FeatureMatrix subset(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    FeatureMatrix s;
    s.n_rows = rows.size();
    s.n_cols = cols.size();
    s.setting = setting;
    s.values.reserve(s.n_rows * s.n_cols);
    for (auto i : rows) {
      for (auto j : cols) s.values.push_back(at(i, j));
      s.labels.push_back(labels[i]);
    }
    for (auto j : cols) {
      s.metas.push_back(metas[j]);
      s.degenerate_counts.push_back(degenerate_counts.empty() ? 0 : degenerate_counts[j]);
    }
    return s;
  }
};

inline FeatureMatrix extract(std::span<const BandPowerTensor> tensors, std::span<const Label> labels,
                             const BandSetting& setting, std::size_t jobs = 1) {
  if (tensors.size() != labels.size()) throw DimensionError("one label per tensor required");
  for (const auto& t : tensors)
    if (t.n_channels != tensors.front().n_channels || t.n_frames != tensors.front().n_frames)
      throw DimensionError("band power tensors do not share a shape");
  FeatureMatrix fm;
  fm.setting = setting;
  fm.metas = feature_layout(setting);
  fm.n_rows = tensors.size();
  fm.n_cols = fm.metas.size();
  fm.labels.assign(labels.begin(), labels.end());
  fm.values.assign(fm.n_rows * fm.n_cols, 0.0);
  std::vector<std::uint8_t> flags(fm.n_rows * fm.n_cols, 0);
  const auto bands = setting.bands();
  parallel_for(fm.n_rows, jobs, [&](std::size_t i) {
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
      const std::size_t off = i * fm.n_cols + bi * kFeaturesPerBand;
      extract_band_features(tensors[i], bands[bi], std::span<double>(fm.values).subspan(off, kFeaturesPerBand),
                            std::span<std::uint8_t>(flags).subspan(off, kFeaturesPerBand));
    }
  });
  fm.degenerate_counts.assign(fm.n_cols, 0);
  for (std::size_t i = 0; i < fm.n_rows; ++i)
    for (std::size_t j = 0; j < fm.n_cols; ++j) fm.degenerate_counts[j] += flags[i * fm.n_cols + j];
  return fm;
}

// Band power for every trial of a subject.
inline std::vector<BandPowerTensor> trialset_band_power(const TrialSet& ts, const StftConfig& stft = {},
                                                        std::size_t jobs = 1) {
  std::vector<BandPowerTensor> out(ts.trials.size());
  parallel_for(ts.trials.size(), jobs, [&](std::size_t i) {
    out[i] = band_power(std::span<const float>(ts.trials[i].data), ts.n_channels, ts.fs, stft);
  });
  return out;
}

inline FeatureMatrix extract_trialset(const TrialSet& ts, const BandSetting& setting, const StftConfig& stft = {},
                                      std::size_t jobs = 1) {
  const auto tensors = trialset_band_power(ts, stft, jobs);
  const auto labels = ts.labels();
  return extract(tensors, labels, setting, jobs);
}

// --- serialization -----------------------------------------------------------

inline nlohmann::json meta_to_json(const FeatureMeta& m) {
  const auto& rois = standard_montage().rois();
  nlohmann::json endpoints = nlohmann::json::array();
  for (auto r : m.rois) endpoints.push_back(rois[r].name);
  return {{"id", m.id},
          {"band", band_name(m.band)},
          {"category", category_name(m.category)},
          {"subtype", subtype_name(m.subtype)},
          {"roi_endpoints", endpoints},
          {"name", m.name}};
}

inline FeatureMeta meta_from_json(const nlohmann::json& j) {
  FeatureMeta m;
  m.id = j.at("id").get<std::size_t>();
  m.band = parse_band(j.at("band").get<std::string>());
  m.category = parse_enum_name<Category, kNumCategories>(j.at("category").get<std::string>(), category_name, "category");
  m.subtype = parse_enum_name<Subtype, kNumSubtypes>(j.at("subtype").get<std::string>(), subtype_name, "subtype");
  if (category_of(m.subtype) != m.category) throw FormatError("feature " + std::to_string(m.id) + ": subtype/category mismatch");
  for (const auto& r : j.at("roi_endpoints")) m.rois.push_back(standard_montage().roi(r.get<std::string>()).index);
  m.name = j.at("name").get<std::string>();
  return m;
}

inline nlohmann::json feature_metadata_json(const FeatureMatrix& fm) {
  nlohmann::json j;
  j["format"] = "attnshift-features";
  j["version"] = 1;
  j["setting"] = fm.setting.to_string();
  j["n_rows"] = fm.n_rows;
  j["n_cols"] = fm.n_cols;
  auto& labels = j["labels"] = nlohmann::json::array();
  for (auto l : fm.labels) labels.push_back(label_name(l));
  auto& feats = j["features"] = nlohmann::json::array();
  for (std::size_t c = 0; c < fm.n_cols; ++c) {
    auto mj = meta_to_json(fm.metas[c]);
    mj["degenerate_count"] = fm.degenerate_counts.empty() ? 0U : fm.degenerate_counts[c];
    feats.push_back(std::move(mj));
  }
  return j;
}

// <stem>.json holds metadata, <stem>.f32 holds "FMX1", u32 rows, u32 cols, row-major f32.
inline void write_feature_matrix(const std::string& stem, const FeatureMatrix& fm) {
  if (const auto dir = std::filesystem::path(stem).parent_path(); !dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  }
  {
    std::ofstream out(stem + ".json", std::ios::trunc);
    if (!out) throw IoError("cannot write '" + stem + ".json'");
    out << feature_metadata_json(fm).dump(1) << '\n';
  }
  binio::Writer w;
  w.bytes("FMX1");
  w.u32(static_cast<std::uint32_t>(fm.n_rows));
  w.u32(static_cast<std::uint32_t>(fm.n_cols));
  for (double v : fm.values) w.f32(static_cast<float>(v));
  w.save(stem + ".f32");
}

inline FeatureMatrix read_feature_matrix(const std::string& stem) {
  std::ifstream in(stem + ".json");
  if (!in) throw IoError("cannot read '" + stem + ".json'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(stem + ".json: " + e.what());
  }
  FeatureMatrix fm;
  fm.setting = BandSetting::parse(j.at("setting").get<std::string>());
  fm.n_rows = j.at("n_rows").get<std::size_t>();
  fm.n_cols = j.at("n_cols").get<std::size_t>();
  for (const auto& l : j.at("labels")) fm.labels.push_back(l.get<std::string>() == "TCSI" ? Label::TCSI : Label::EI);
  for (const auto& f : j.at("features")) {
    fm.metas.push_back(meta_from_json(f));
    fm.degenerate_counts.push_back(f.value("degenerate_count", 0U));
  }
  if (fm.metas.size() != fm.n_cols || fm.labels.size() != fm.n_rows)
    throw FormatError(stem + ".json: feature/label count does not match n_cols/n_rows");

  binio::Reader r(binio::load(stem + ".f32"));
  r.magic("FMX1");
  if (r.u32("n_rows") != fm.n_rows) throw FormatError("bad field 'n_rows' in " + stem + ".f32");
  if (r.u32("n_cols") != fm.n_cols) throw FormatError("bad field 'n_cols' in " + stem + ".f32");
  r.expect_remaining(fm.n_rows * fm.n_cols * 4);
  fm.values.resize(fm.n_rows * fm.n_cols);
  for (auto& v : fm.values) v = r.f32("values");
  return fm;
}

inline void write_feature_csv(const std::string& path, const FeatureMatrix& fm) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.precision(17);
  out << "label";
  for (const auto& m : fm.metas) out << ",\"" << m.describe() << '"';
  out << '\n';
  for (std::size_t i = 0; i < fm.n_rows; ++i) {
    out << label_name(fm.labels[i]);
    for (std::size_t j = 0; j < fm.n_cols; ++j) out << ',' << fm.at(i, j);
    out << '\n';
  }
}

}  // namespace attnshift

#pragma once

// BioSemi-64 electrode layout and the 16 regions of interest used throughout
// feature extraction, attribution and topography.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "attnshift/common.hpp"

namespace attnshift {

inline constexpr std::size_t kNumChannels = 64;
inline constexpr std::size_t kNumRois = 16;
inline constexpr std::size_t kChannelsPerRoi = 4;

enum class Hemisphere { Left, Right, Midline };
enum class Anteriority { Anterior, Central, Posterior };

inline const char* hemisphere_name(Hemisphere h) {
  switch (h) {
    case Hemisphere::Left: return "left";
    case Hemisphere::Right: return "right";
    case Hemisphere::Midline: return "midline";
  }
  return "?";
}

inline const char* anteriority_name(Anteriority a) {
  switch (a) {
    case Anteriority::Anterior: return "anterior";
    case Anteriority::Central: return "central";
    case Anteriority::Posterior: return "posterior";
  }
  return "?";
}

struct Channel {
  std::string label;
  std::size_t index = 0;
  // Unit-disc head coordinates: +x right, +y nose.
  double x = 0.0;
  double y = 0.0;
};

struct Roi {
  std::string name;
  std::size_t index = 0;
  std::array<std::string, kChannelsPerRoi> channels;
  std::array<std::size_t, kChannelsPerRoi> channel_indices{};
  Hemisphere hemisphere = Hemisphere::Midline;
  std::string group;
  Anteriority anteriority = Anteriority::Central;
};

class Montage {
 public:
  const std::vector<Channel>& channels() const { return channels_; }
  const std::vector<Roi>& rois() const { return rois_; }

  const Channel& channel(std::string_view label) const { return channels_[channel_index(label)]; }

  std::size_t channel_index(std::string_view label) const {
    for (const auto& c : channels_)
      if (c.label == label) return c.index;
    throw UnknownLabelError("unknown channel label '" + std::string(label) + "'");
  }

  const Roi& roi(std::string_view name) const {
    for (const auto& r : rois_)
      if (r.name == name) return r;
    throw UnknownLabelError("unknown ROI '" + std::string(name) + "'");
  }

  const Roi& roi_of(std::string_view channel_label) const {
    return rois_[roi_of_channel_[channel_index(channel_label)]];
  }
  std::size_t roi_index_of_channel(std::size_t channel) const { return roi_of_channel_.at(channel); }

  // (left ROI index, right ROI index), one per group row that has both sides.
  const std::vector<std::pair<std::size_t, std::size_t>>& hemisphere_pairs() const { return pairs_; }

  // Mirror partner of a ROI; midline ROIs map to themselves.
  std::size_t mirror_roi(std::size_t roi) const {
    for (const auto& [l, r] : pairs_) {
      if (l == roi) return r;
      if (r == roi) return l;
    }
    return roi;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["montage"] = "biosemi64";
    auto& ch = j["channels"] = nlohmann::json::array();
    for (const auto& c : channels_)
      ch.push_back({{"label", c.label}, {"index", c.index}, {"x", c.x}, {"y", c.y},
                    {"roi", rois_[roi_of_channel_[c.index]].name}});
    auto& rs = j["rois"] = nlohmann::json::array();
    for (const auto& r : rois_)
      rs.push_back({{"name", r.name}, {"index", r.index}, {"group", r.group},
                    {"hemisphere", hemisphere_name(r.hemisphere)},
                    {"anteriority", anteriority_name(r.anteriority)},
                    {"channels", r.channels}});
    return j;
  }

 private:
  friend const Montage& standard_montage();
  Montage() = default;

  std::vector<Channel> channels_;
  std::vector<Roi> rois_;
  std::vector<std::size_t> roi_of_channel_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

namespace detail {

struct SphericalPos {
  const char* label;
  double theta;  // degrees from vertex, negative on the left
  double phi;
};

// Left-hemisphere and midline sites; right-hemisphere sites are their exact mirrors.
inline constexpr std::array<SphericalPos, 37> kLeftAndMidline{{
    {"Fp1", -92, -72}, {"AF7", -92, -54}, {"AF3", -74, -65}, {"F1", -50, -68},  {"F3", -60, -51},
    {"F5", -75, -41},  {"F7", -92, -36},  {"FT7", -92, -18}, {"FC5", -72, -21}, {"FC3", -50, -28},
    {"FC1", -32, -45}, {"C1", -23, 0},    {"C3", -46, 0},    {"C5", -69, 0},    {"T7", -92, 0},
    {"TP7", -92, 18},  {"CP5", -72, 21},  {"CP3", -50, 28},  {"CP1", -32, 45},  {"P1", -50, 68},
    {"P3", -60, 51},   {"P5", -75, 41},   {"P7", -92, 36},   {"P9", -115, 36},  {"PO7", -92, 54},
    {"PO3", -74, 65},  {"O1", -92, 72},   {"Iz", 115, -90},  {"Oz", 92, -90},   {"POz", 69, -90},
    {"Pz", 46, -90},   {"CPz", 23, -90},  {"Fpz", 92, 90},   {"AFz", 69, 90},   {"Fz", 46, 90},
    {"FCz", 23, 90},   {"Cz", 0, 0},
}};

// BioSemi A1..A32, B1..B32 order.
inline constexpr std::array<const char*, kNumChannels> kChannelOrder{
    "Fp1", "AF7", "AF3", "F1",  "F3",  "F5",  "F7",  "FT7", "FC5", "FC3", "FC1", "C1",  "C3",
    "C5",  "T7",  "TP7", "CP5", "CP3", "CP1", "P1",  "P3",  "P5",  "P7",  "P9",  "PO7", "PO3",
    "O1",  "Iz",  "Oz",  "POz", "Pz",  "CPz", "Fpz", "Fp2", "AF8", "AF4", "AFz", "Fz",  "F2",
    "F4",  "F6",  "F8",  "FT8", "FC6", "FC4", "FC2", "FCz", "Cz",  "C2",  "C4",  "C6",  "T8",
    "TP8", "CP6", "CP4", "CP2", "P2",  "P4",  "P6",  "P8",  "P10", "PO8", "PO4", "O2"};

struct RoiRow {
  const char* group;
  Anteriority anteriority;
  std::array<const char*, 4> left;
  std::array<const char*, 4> right;
  std::optional<std::array<const char*, 4>> midline;
};

inline const std::array<RoiRow, 7>& roi_table() {
  static const std::array<RoiRow, 7> rows{{
      {"Prefrontal", Anteriority::Anterior, {"Fp1", "AF7", "AF3", "F1"}, {"Fp2", "AF8", "AF4", "F2"}, std::nullopt},
      {"Frontal", Anteriority::Anterior, {"F3", "F5", "F7", "FT7"}, {"F4", "F6", "F8", "FT8"},
       std::array<const char*, 4>{"Fpz", "AFz", "Fz", "FCz"}},
      {"Fronto-central", Anteriority::Anterior, {"FC5", "FC3", "FC1", "C1"}, {"FC6", "FC4", "FC2", "C2"}, std::nullopt},
      {"Centro-temporal", Anteriority::Central, {"C3", "C5", "T7", "TP7"}, {"C4", "C6", "T8", "TP8"}, std::nullopt},
      {"Parietal1", Anteriority::Posterior, {"CP5", "CP3", "CP1", "P1"}, {"CP6", "CP4", "CP2", "P2"},
       std::array<const char*, 4>{"Cz", "CPz", "Pz", "POz"}},
      {"Parietal2", Anteriority::Posterior, {"P3", "P5", "P7", "P9"}, {"P4", "P6", "P8", "P10"}, std::nullopt},
      {"Occipital", Anteriority::Posterior, {"PO7", "PO3", "O1", "Iz"}, {"PO8", "PO4", "O2", "Oz"}, std::nullopt},
  }};
  return rows;
}

// Region names as reported in attribution tables; Parietal1 reads "parietal".
inline std::string roi_stem(const std::string& group) {
  if (group == "Parietal1") return "parietal";
  if (group == "Parietal2") return "parietal2";
  std::string s = group;
  s[0] = static_cast<char>(s[0] - 'A' + 'a');
  return s;
}

inline std::string mirror_label(const std::string& left) {
  // Odd trailing number on the left becomes the next even number on the right.
  std::size_t pos = left.find_first_of("0123456789");
  int n = std::stoi(left.substr(pos));
  return left.substr(0, pos) + std::to_string(n + 1);
}

}  // namespace detail

inline const Montage& standard_montage() {
  static const Montage m = [] {
    Montage mt;
    struct Pos {
      std::string label;
      double x, y;
    };
    std::vector<Pos> positions;
    constexpr double kMaxTheta = 120.0;
    for (const auto& p : detail::kLeftAndMidline) {
      const double r = p.theta / kMaxTheta;
      const double a = p.phi * std::numbers::pi / 180.0;
      const bool midline = p.label[std::string_view(p.label).size() - 1] == 'z';
      const double x = midline ? 0.0 : r * std::cos(a);
      const double y = r * std::sin(a);
      positions.push_back({p.label, x, y});
      if (!midline) positions.push_back({detail::mirror_label(p.label), -x, y});
    }
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      const std::string label = detail::kChannelOrder[i];
      for (const auto& p : positions)
        if (p.label == label) mt.channels_.push_back({label, i, p.x, p.y});
    }

    mt.roi_of_channel_.assign(kNumChannels, kNumRois);
    auto add = [&](const detail::RoiRow& row, Hemisphere h, const std::array<const char*, 4>& labels) {
      Roi r;
      r.index = mt.rois_.size();
      r.name = std::string(hemisphere_name(h)) + " " + detail::roi_stem(row.group);
      r.group = row.group;
      r.hemisphere = h;
      r.anteriority = row.anteriority;
      for (std::size_t k = 0; k < kChannelsPerRoi; ++k) {
        r.channels[k] = labels[k];
        r.channel_indices[k] = mt.channel_index(labels[k]);
        mt.roi_of_channel_[r.channel_indices[k]] = r.index;
      }
      mt.rois_.push_back(std::move(r));
      return mt.rois_.back().index;
    };
    for (const auto& row : detail::roi_table()) {
      const std::size_t l = add(row, Hemisphere::Left, row.left);
      const std::size_t r = add(row, Hemisphere::Right, row.right);
      mt.pairs_.emplace_back(l, r);
      if (row.midline) add(row, Hemisphere::Midline, *row.midline);
    }
    return mt;
  }();
  return m;
}

inline const Roi& roi_of(std::string_view channel_label) { return standard_montage().roi_of(channel_label); }

inline const std::vector<std::pair<std::size_t, std::size_t>>& hemisphere_pairs() {
  return standard_montage().hemisphere_pairs();
}

}  // namespace attnshift

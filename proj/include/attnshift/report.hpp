#pragma once

// SVG rendering (ROI topographies, SHAP summaries) and Markdown result tables.
// Output is a pure function of the inputs: no clock, locale or RNG.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attnshift/common.hpp"
#include "attnshift/eval.hpp"
#include "attnshift/features.hpp"
#include "attnshift/montage.hpp"
#include "attnshift/shap.hpp"

namespace attnshift {

// --- formatting ------------------------------------------------------------------

inline std::string fixed(double v, int precision = 3) {
  if (v == 0.0) v = 0.0;  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  std::string s(buf, res.ptr);
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// --- colormap --------------------------------------------------------------------

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

inline std::string hex(Rgb c) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "#";
  for (auto v : {c.r, c.g, c.b}) {
    s += digits[v >> 4];
    s += digits[v & 15];
  }
  return s;
}

// Viridis sampled at nine evenly spaced stops.
inline constexpr std::array<std::array<double, 3>, 9> kViridis{{{68, 1, 84},
                                                               {71, 44, 122},
                                                               {59, 81, 139},
                                                               {44, 113, 142},
                                                               {33, 144, 141},
                                                               {39, 173, 129},
                                                               {92, 200, 99},
                                                               {170, 220, 50},
                                                               {253, 231, 37}}};

inline Rgb colormap(const std::string& name, double t) {
  if (name != "viridis") throw ConfigError("unknown colormap '" + name + "'");
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * static_cast<double>(kViridis.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), kViridis.size() - 2);
  const double f = pos - static_cast<double>(i);
  auto mix = [&](int k) {
    return static_cast<std::uint8_t>(std::lround(kViridis[i][k] + f * (kViridis[i + 1][k] - kViridis[i][k])));
  };
  return {mix(0), mix(1), mix(2)};
}

// --- geometry ----------------------------------------------------------------------

using Point = std::pair<double, double>;

// Andrew's monotone chain; counter-clockwise, no collinear vertices.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point& o, const Point& a, const Point& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline constexpr double kPatchPadding = 0.055;

// Convex patch around a ROI's electrodes, padded by an octagon so collinear
// midline groups still have area. Midline electrodes of lateral ROIs sit on a
// shared anchor so mirrored ROI pairs produce mirrored patches.
inline std::vector<Point> roi_patch(const Montage& m, std::size_t roi) {
  const Roi& r = m.rois().at(roi);
  auto midline_ys = [&](const Roi& q) {
    std::vector<double> ys;
    for (auto c : q.channel_indices)
      if (m.channels()[c].x == 0.0) ys.push_back(m.channels()[c].y);
    return ys;
  };
  std::optional<double> anchor;
  if (r.hemisphere != Hemisphere::Midline) {
    auto ys = midline_ys(r);
    const auto partner = midline_ys(m.rois()[m.mirror_roi(roi)]);
    if (!ys.empty() || !partner.empty()) {
      ys.insert(ys.end(), partner.begin(), partner.end());
      double s = 0.0;
      for (double y : ys) s += y;
      anchor = s / static_cast<double>(ys.size());
    }
  }
  std::vector<Point> pts;
  for (auto c : r.channel_indices) {
    const auto& ch = m.channels()[c];
    const double y = (anchor && ch.x == 0.0) ? *anchor : ch.y;
    for (int k = 0; k < 8; ++k) {
      const double a = (22.5 + 45.0 * k) * std::numbers::pi / 180.0;
      pts.emplace_back(ch.x + kPatchPadding * std::cos(a), y + kPatchPadding * std::sin(a));
    }
  }
  return convex_hull(std::move(pts));
}

// --- topography ---------------------------------------------------------------------

struct TopomapSpec {
  std::map<std::string, double> values;  // keyed by ROI name
  double vmin = 0.0;
  double vmax = 1.0;
  std::string colormap = "viridis";
  std::string title;
  std::string band;
};

inline TopomapSpec topomap_spec(std::span<const double> per_roi, double vmin, double vmax, std::string title,
                                std::string band, const Montage& m = standard_montage()) {
  if (per_roi.size() != kNumRois) throw DimensionError("topomap needs one value per ROI");
  TopomapSpec s;
  for (std::size_t r = 0; r < kNumRois; ++r) s.values[m.rois()[r].name] = per_roi[r];
  s.vmin = vmin;
  s.vmax = vmax;
  s.title = std::move(title);
  s.band = std::move(band);
  return s;
}

namespace detail {

inline constexpr double kHeadCx = 180.0;
inline constexpr double kHeadCy = 200.0;
inline constexpr double kHeadR = 140.0;

inline std::string px(double x) { return fixed(kHeadCx + x * kHeadR); }
inline std::string py(double y) { return fixed(kHeadCy - y * kHeadR); }

}  // namespace detail

inline std::string render_topomap(const TopomapSpec& spec, const Montage& m = standard_montage()) {
  using detail::px;
  using detail::py;
  if (!std::isfinite(spec.vmin) || !std::isfinite(spec.vmax) || spec.vmax < spec.vmin)
    throw ConfigError("topomap color scale must be finite with vmin <= vmax");
  for (const auto& [name, v] : spec.values) {
    m.roi(name);
    if (!std::isfinite(v)) throw Error("topomap value for ROI '" + name + "' is not finite");
  }
  const double span = spec.vmax - spec.vmin;
  auto scale = [&](double v) { return span > 0.0 ? (v - spec.vmin) / span : 0.5; };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"360\" height=\"440\" viewBox=\"0 0 360 440\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"360\" height=\"440\" fill=\"#ffffff\"/>\n";
  s += "<text x=\"180\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       xml_escape(spec.title) + "</text>\n";
  if (!spec.band.empty())
    s += "<text x=\"180\" y=\"44\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         xml_escape(spec.band) + "</text>\n";
  // Head outline and nose.
  s += "<polygon class=\"nose\" points=\"" + px(-0.12) + "," + py(0.99) + " " + px(0.0) + "," + py(1.12) + " " +
       px(0.12) + "," + py(0.99) + "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
  s += "<circle class=\"head\" cx=\"" + px(0) + "\" cy=\"" + py(0) + "\" r=\"" + fixed(detail::kHeadR) +
       "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
  for (const auto& roi : m.rois()) {
    auto it = spec.values.find(roi.name);
    if (it == spec.values.end()) throw Error("topomap is missing a value for ROI '" + roi.name + "'");
    s += "<polygon data-roi=\"" + xml_escape(roi.name) + "\" data-value=\"" + fixed(it->second, 6) + "\" points=\"";
    const auto patch = roi_patch(m, roi.index);
    for (std::size_t i = 0; i < patch.size(); ++i) {
      if (i) s += ' ';
      s += px(patch[i].first) + "," + py(patch[i].second);
    }
    s += "\" fill=\"" + hex(colormap(spec.colormap, scale(it->second))) +
         "\" stroke=\"#303030\" stroke-width=\"0.6\"/>\n";
  }
  for (const auto& ch : m.channels())
    s += "<circle class=\"electrode\" cx=\"" + px(ch.x) + "\" cy=\"" + py(ch.y) + "\" r=\"1.6\" fill=\"#000000\"/>\n";
  // Horizontal color bar with ticks at both ends and the midpoint.
  constexpr int kSteps = 32;
  constexpr double kBarX = 60.0, kBarY = 380.0, kBarW = 240.0, kBarH = 12.0;
  for (int i = 0; i < kSteps; ++i) {
    const double t = (i + 0.5) / kSteps;
    s += "<rect class=\"colorbar\" x=\"" + fixed(kBarX + kBarW * i / kSteps) + "\" y=\"" + fixed(kBarY) +
         "\" width=\"" + fixed(kBarW / kSteps) + "\" height=\"" + fixed(kBarH) + "\" fill=\"" +
         hex(colormap(spec.colormap, t)) + "\"/>\n";
  }
  for (int i = 0; i <= 2; ++i) {
    const double x = kBarX + kBarW * i / 2.0;
    const double v = spec.vmin + span * i / 2.0;
    s += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(kBarY + kBarH) + "\" x2=\"" + fixed(x) + "\" y2=\"" +
         fixed(kBarY + kBarH + 4) + "\" stroke=\"#000000\"/>\n";
    s += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(kBarY + kBarH + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fixed(v) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

// --- SHAP summary --------------------------------------------------------------------

struct ShapSummary {
  std::string svg;
  std::vector<std::size_t> rows;  // column indices, top row first
  std::optional<std::string> warning;
};

// Mean |phi| per column over trials.
inline std::vector<double> mean_abs_attribution(std::span<const std::vector<double>> phis, std::size_t n_features) {
  std::vector<double> m(n_features, 0.0);
  for (const auto& p : phis) {
    if (p.size() != n_features) throw DimensionError("attribution length differs from feature count");
    for (std::size_t j = 0; j < n_features; ++j) m[j] += std::abs(p[j]);
  }
  if (!phis.empty())
    for (auto& v : m) v /= static_cast<double>(phis.size());
  return m;
}

// Features with nonzero mean |phi|, largest first, ties by column index.
inline std::vector<std::size_t> top_features(std::span<const double> mean_abs, std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < mean_abs.size(); ++j)
    if (mean_abs[j] > 0.0) idx.push_back(j);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return mean_abs[a] != mean_abs[b] ? mean_abs[a] > mean_abs[b] : a < b; });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

// One row per top feature; each trial is a point at its phi. Points are colored by
// the trial's feature value (low to high) when `feature_values` (trial-major) is given.
inline ShapSummary render_shap_summary(std::span<const std::vector<double>> phis, std::span<const FeatureMeta> metas,
                                       std::size_t k, std::span<const std::vector<double>> feature_values = {},
                                       const std::string& title = "SHAP summary") {
  if (k == 0) throw ConfigError("summary plot needs k >= 1");
  ShapSummary out;
  if (k > metas.size()) {
    out.warning = "k = " + std::to_string(k) + " exceeds the feature count; clamped to " + std::to_string(metas.size());
    k = metas.size();
  }
  if (!feature_values.empty() && feature_values.size() != phis.size())
    throw DimensionError("feature values and attributions differ in trial count");
  const auto mean_abs = mean_abs_attribution(phis, metas.size());
  out.rows = top_features(mean_abs, k);

  double extent = 0.0;
  for (auto j : out.rows)
    for (const auto& p : phis) extent = std::max(extent, std::abs(p[j]));
  if (extent == 0.0) extent = 1.0;

  constexpr double kLeft = 300.0, kWidth = 320.0, kTop = 50.0, kRowH = 26.0;
  const double height = kTop + kRowH * static_cast<double>(std::max<std::size_t>(out.rows.size(), 1)) + 80.0;
  auto xpos = [&](double phi) { return kLeft + kWidth * (phi + extent) / (2.0 * extent); };
  const double axis_y = kTop + kRowH * static_cast<double>(std::max<std::size_t>(out.rows.size(), 1)) + 8.0;

  std::string& s = out.svg;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"660\" height=\"" + fixed(height, 0) +
       "\" viewBox=\"0 0 660 " + fixed(height, 0) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"660\" height=\"" + fixed(height, 0) + "\" fill=\"#ffffff\"/>\n";
  s += "<text x=\"330\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       xml_escape(title) + "</text>\n";
  s += "<line class=\"zero\" x1=\"" + fixed(xpos(0)) + "\" y1=\"" + fixed(kTop - 6) + "\" x2=\"" + fixed(xpos(0)) +
       "\" y2=\"" + fixed(axis_y) + "\" stroke=\"#999999\"/>\n";
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    const std::size_t j = out.rows[r];
    const double cy = kTop + kRowH * (static_cast<double>(r) + 0.5);
    s += "<g class=\"row\" data-feature=\"" + std::to_string(metas[j].id) + "\" data-mean-abs=\"" +
         fixed(mean_abs[j], 9) + "\">\n";
    s += "<text x=\"" + fixed(kLeft - 8) + "\" y=\"" + fixed(cy + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + xml_escape(metas[j].describe()) +
         "</text>\n";
    double lo = 0.0, hi = 0.0;
    if (!feature_values.empty()) {
      lo = hi = feature_values[0].at(j);
      for (const auto& v : feature_values) {
        lo = std::min(lo, v.at(j));
        hi = std::max(hi, v.at(j));
      }
    }
    for (std::size_t t = 0; t < phis.size(); ++t) {
      const double jitter = (static_cast<double>(splitmix64(t * 7919 + j) % 1000) / 999.0 - 0.5) * kRowH * 0.6;
      std::string fill = phis[t][j] < 0 ? "#2c7bb6" : "#d7191c";
      if (!feature_values.empty())
        fill = hex(colormap("viridis", hi > lo ? (feature_values[t][j] - lo) / (hi - lo) : 0.5));
      s += "<circle cx=\"" + fixed(xpos(phis[t][j])) + "\" cy=\"" + fixed(cy + jitter) + "\" r=\"2.2\" fill=\"" +
           fill + "\" fill-opacity=\"0.8\"/>\n";
    }
    s += "</g>\n";
  }
  s += "<line class=\"axis\" x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(axis_y) + "\" x2=\"" + fixed(kLeft + kWidth) +
       "\" y2=\"" + fixed(axis_y) + "\" stroke=\"#000000\"/>\n";
  for (int i = 0; i <= 2; ++i) {
    const double v = -extent + extent * i;
    s += "<text x=\"" + fixed(xpos(v)) + "\" y=\"" + fixed(axis_y + 14) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fixed(v, 4) + "</text>\n";
  }
  s += "<text x=\"" + fixed(kLeft + kWidth / 2) + "\" y=\"" + fixed(axis_y + 32) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">SHAP value (impact on P(EI))</text>\n";
  s += "<text class=\"sign-convention\" x=\"" + fixed(kLeft + kWidth / 2) + "\" y=\"" + fixed(axis_y + 50) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">negative values favor TCSI, positive "
       "values favor EI</text>\n";
  s += "</svg>\n";
  return out;
}

// --- tables --------------------------------------------------------------------------

struct ShareRow {
  std::string label;
  double mean = 0.0;
  double sd = 0.0;
};

// Throws unless every aggregation level of `r` sums to 1 within `tol`.
inline void check_normalized(const AttributionReport& r, double tol = 1e-9) {
  auto check = [&](std::span<const double> v, const char* level) {
    double s = 0.0;
    for (double x : v) s += x;
    if (std::abs(s - 1.0) > tol)
      throw Error(std::string(level) + " shares for " + r.participant + " sum to " + fixed(s, 12));
  };
  check(r.band, "band");
  check(r.category, "category");
  check(r.subtype, "subtype");
  check(r.roi, "ROI");
}

namespace detail {

template <std::size_t N, typename Get>
std::vector<ShareRow> share_rows(std::span<const AttributionReport> reports, Get get,
                                 const std::array<std::string, N>& labels, bool sort_desc) {
  std::vector<ShareRow> rows(N);
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(get(r)[i]);
    const auto ms = mean_sd(v);
    rows[i] = {labels[i], ms.mean, ms.sd};
  }
  if (sort_desc)
    std::stable_sort(rows.begin(), rows.end(), [](const ShareRow& a, const ShareRow& b) { return a.mean > b.mean; });
  return rows;
}

inline std::string share_table(const std::string& head, const std::vector<ShareRow>& rows) {
  std::string s = "| " + head + " | Mean norm. abs(SHAP) | SD |\n|---|---:|---:|\n";
  for (const auto& r : rows) s += "| " + r.label + " | " + fixed(r.mean) + " | " + fixed(r.sd) + " |\n";
  return s;
}

}  // namespace detail

inline std::vector<ShareRow> band_shares(std::span<const AttributionReport> reports) {
  std::array<std::string, kNumBands> labels;
  for (std::size_t b = 0; b < kNumBands; ++b) labels[b] = kBands[b].name;
  return detail::share_rows<kNumBands>(reports, [](const AttributionReport& r) { return r.band; }, labels, true);
}

inline std::vector<ShareRow> roi_shares(std::span<const AttributionReport> reports, const Montage& m = standard_montage()) {
  std::array<std::string, kNumRois> labels;
  for (std::size_t r = 0; r < kNumRois; ++r) labels[r] = m.rois()[r].name;
  return detail::share_rows<kNumRois>(reports, [](const AttributionReport& r) { return r.roi; }, labels, true);
}

inline std::vector<ShareRow> category_shares(std::span<const AttributionReport> reports) {
  std::array<std::string, kNumCategories> labels;
  for (std::size_t c = 0; c < kNumCategories; ++c) labels[c] = category_name(static_cast<Category>(c));
  return detail::share_rows<kNumCategories>(reports, [](const AttributionReport& r) { return r.category; }, labels,
                                            false);
}

inline std::vector<ShareRow> subtype_shares(std::span<const AttributionReport> reports) {
  std::array<std::string, kNumSubtypes> labels;
  for (std::size_t t = 0; t < kNumSubtypes; ++t) labels[t] = subtype_name(static_cast<Subtype>(t));
  return detail::share_rows<kNumSubtypes>(reports, [](const AttributionReport& r) { return r.subtype; }, labels,
                                          false);
}

inline std::string band_table_md(std::span<const AttributionReport> reports) {
  return detail::share_table("Band", band_shares(reports));
}

inline std::string roi_table_md(std::span<const AttributionReport> reports, const Montage& m = standard_montage()) {
  return detail::share_table("Region", roi_shares(reports, m));
}

// Categories in bold with their subtypes indented underneath.
inline std::string feature_type_table_md(std::span<const AttributionReport> reports,
                                         const std::array<double, kNumCategories>& budget_fractions) {
  const auto cats = category_shares(reports);
  const auto subs = subtype_shares(reports);
  std::string s = "| Feature type | Mean norm. abs(SHAP) | SD |\n|---|---:|---:|\n";
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    s += "| **" + cats[c].label + " (" + fixed(100.0 * budget_fractions[c], 0) + "%)** | **" + fixed(cats[c].mean) +
         "** | **" + fixed(cats[c].sd) + "** |\n";
    for (std::size_t t = 0; t < kNumSubtypes; ++t)
      if (static_cast<std::size_t>(category_of(static_cast<Subtype>(t))) == c)
        s += "| &nbsp;&nbsp;" + subs[t].label + " | " + fixed(subs[t].mean) + " | " + fixed(subs[t].sd) + " |\n";
  }
  return s;
}

struct SettingSummary {
  std::string setting;  // "multi" or a band name
  MeanSd accuracy;      // across participants of per-participant fold means
  MeanSd auc;
  std::size_t n_participants = 0;
};

inline SettingSummary summarize(const std::string& setting, std::span<const SubjectResult> results) {
  std::vector<double> acc, au;
  for (const auto& r : results) {
    acc.push_back(r.accuracy.mean);
    au.push_back(r.auc.mean);
  }
  return {setting, mean_sd(acc), mean_sd(au), results.size()};
}

inline std::string pm(const MeanSd& m) { return fixed(m.mean) + " ± " + fixed(m.sd); }

// Metric rows, one column per band setting.
inline std::string metrics_table_md(std::span<const SettingSummary> settings) {
  std::string s = "| Metric |";
  std::string rule = "|---|";
  for (const auto& st : settings) {
    s += " " + st.setting + " |";
    rule += "---|";
  }
  s += "\n" + rule + "\n| Accuracy |";
  for (const auto& st : settings) s += " " + pm(st.accuracy) + " |";
  s += "\n| AUC |";
  for (const auto& st : settings) s += " " + pm(st.auc) + " |";
  return s + "\n";
}

inline std::string subject_table_md(std::span<const SubjectResult> results) {
  std::string s = "| Participant | Trials | TCSI | EI | Accuracy | AUC |\n|---|---:|---:|---:|---|---|\n";
  for (const auto& r : results)
    s += "| " + r.subject_id + " | " + std::to_string(r.n_trials) + " | " + std::to_string(r.n_tcsi) + " | " +
         std::to_string(r.n_trials - r.n_tcsi) + " | " + pm(r.accuracy) + " | " + pm(r.auc) + " |\n";
  return s;
}

inline std::string loso_table_md(const LosoResult& r) {
  std::string s = "| Held-out participant | Test trials | Accuracy | AUC |\n|---|---:|---:|---:|\n";
  for (const auto& e : r.subjects)
    s += "| " + e.subject_id + " | " + std::to_string(e.n_test) + " | " + fixed(e.accuracy) + " | " + fixed(e.auc) +
         " |\n";
  s += "| mean ± sd | | " + pm(r.accuracy) + " | " + pm(r.auc) + " |\n";
  return s;
}

// Mean ROC on the FPR grid with a one-sd envelope, as CSV.
inline std::string roc_csv(std::span<const double> mean_tpr, std::span<const double> sd_tpr) {
  std::string s = "fpr,tpr_mean,tpr_sd\n";
  for (std::size_t g = 0; g < mean_tpr.size(); ++g)
    s += fixed(static_cast<double>(g) / static_cast<double>(mean_tpr.size() - 1), 2) + "," + fixed(mean_tpr[g], 6) +
         "," + fixed(sd_tpr[g], 6) + "\n";
  return s;
}

}  // namespace attnshift

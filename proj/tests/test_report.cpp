#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "attnshift/report.hpp"

using namespace attnshift;

namespace {

// Tag balance and attribute quoting; enough to catch malformed output.
bool well_formed(const std::string& xml) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = xml.find('<', i)) != std::string::npos) {
    const auto e = xml.find('>', i);
    if (e == std::string::npos) return false;
    std::string tag = xml.substr(i + 1, e - i - 1);
    i = e + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    if (tag.back() == '/') continue;
    stack.push_back(tag.substr(0, tag.find(' ')));
  }
  return stack.empty();
}

std::map<std::string, std::vector<std::pair<double, double>>> polygons(const std::string& svg) {
  std::map<std::string, std::vector<std::pair<double, double>>> out;
  const std::regex re("data-roi=\"([^\"]+)\"[^>]*points=\"([^\"]+)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    std::istringstream ss((*it)[2].str());
    std::string pt;
    auto& poly = out[(*it)[1].str()];
    while (ss >> pt) {
      const auto c = pt.find(',');
      poly.emplace_back(std::stod(pt.substr(0, c)), std::stod(pt.substr(c + 1)));
    }
  }
  return out;
}

std::vector<std::string> fills(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re("data-roi=\"[^\"]+\"[^>]*fill=\"(#[0-9a-f]{6})\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1].str());
  return out;
}

AttributionReport random_report(std::uint64_t seed) {
  const auto metas = feature_layout(BandSetting::multi_band());
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ex;
  std::vector<std::vector<double>> phis(4, std::vector<double>(metas.size()));
  for (auto& p : phis)
    for (auto& v : p) v = ex(rng);
  return aggregate(std::span<const std::vector<double>>(phis), metas);
}

}  // namespace

TEST(Report, FixedFormatting) {
  EXPECT_EQ(fixed(0.96249), "0.962");
  EXPECT_EQ(fixed(-0.0001), "0.000");
  EXPECT_EQ(fixed(2.5, 1), "2.5");
  EXPECT_EQ(xml_escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
}

TEST(Report, ColormapEndpoints) {
  EXPECT_EQ(hex(colormap("viridis", 0.0)), "#440154");
  EXPECT_EQ(hex(colormap("viridis", 1.0)), "#fde725");
  EXPECT_THROW(colormap("jet", 0.5), ConfigError);
}

TEST(Report, ConstantTopomapUsesOneFill) {
  std::vector<double> v(kNumRois, 0.7);
  const auto svg = render_topomap(topomap_spec(v, 0.0, 1.0, "Constant", "Gamma"));
  const auto f = fills(svg);
  ASSERT_EQ(f.size(), kNumRois);
  EXPECT_EQ(std::set<std::string>(f.begin(), f.end()).size(), 1u);
  EXPECT_TRUE(well_formed(svg));
}

TEST(Report, TopomapIsByteStable) {
  std::vector<double> v(kNumRois);
  std::iota(v.begin(), v.end(), 0.0);
  const auto spec = topomap_spec(v, 0.0, 15.0, "Ramp", "Alpha");
  EXPECT_EQ(render_topomap(spec), render_topomap(spec));
}

// Left and right patches are mirror images about the head's vertical axis.
TEST(Report, TopomapPatchesMirror) {
  std::vector<double> v(kNumRois, 0.5);
  const auto polys = polygons(render_topomap(topomap_spec(v, 0.0, 1.0, "", "")));
  const auto& m = standard_montage();
  ASSERT_EQ(polys.size(), kNumRois);
  for (const auto& r : m.rois()) {
    const auto& a = polys.at(r.name);
    const auto& b = polys.at(m.rois()[m.mirror_roi(r.index)].name);
    ASSERT_EQ(a.size(), b.size()) << r.name;
    for (const auto& [x, y] : a) {
      const bool found = std::any_of(b.begin(), b.end(), [&](const auto& q) {
        return std::abs(q.first - (360.0 - x)) < 0.0015 && std::abs(q.second - y) < 0.0015;
      });
      EXPECT_TRUE(found) << r.name << " vertex " << x << "," << y;
    }
  }
}

TEST(Report, TopomapLayoutElements) {
  std::vector<double> v(kNumRois, 0.5);
  v[3] = 0.9;
  const auto svg = render_topomap(topomap_spec(v, 0.0, 1.0, "Title & more", "Gamma"));
  EXPECT_NE(svg.find("class=\"nose\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"head\""), std::string::npos);
  EXPECT_NE(svg.find("Title &amp; more"), std::string::npos);
  std::size_t electrodes = 0, bars = 0;
  for (std::size_t p = 0; (p = svg.find("class=\"electrode\"", p)) != std::string::npos; ++p) ++electrodes;
  for (std::size_t p = 0; (p = svg.find("class=\"colorbar\"", p)) != std::string::npos; ++p) ++bars;
  EXPECT_EQ(electrodes, 64u);
  EXPECT_EQ(bars, 32u);
  // The nose points up: its apex has the smallest y of all drawn points.
  const auto polys = polygons(svg);
  for (const auto& [name, pts] : polys)
    for (const auto& p : pts) EXPECT_GT(p.second, 200.0 - 1.12 * 140.0) << name;
}

TEST(Report, TopomapErrors) {
  std::vector<double> v(kNumRois, 0.5);
  auto spec = topomap_spec(v, 0.0, 1.0, "", "");
  spec.values.erase("left frontal");
  EXPECT_THROW(render_topomap(spec), Error);
  spec = topomap_spec(v, 0.0, 1.0, "", "");
  spec.values["bogus"] = 1.0;
  EXPECT_THROW(render_topomap(spec), UnknownLabelError);
  spec = topomap_spec(v, 1.0, 0.0, "", "");
  EXPECT_THROW(render_topomap(spec), ConfigError);
  v[0] = std::nan("");
  EXPECT_THROW(render_topomap(topomap_spec(v, 0.0, 1.0, "", "")), Error);
}

TEST(Report, SummaryRowsFollowMeanAbs) {
  const auto metas = band_feature_layout(Band::Gamma);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> phis(12, std::vector<double>(metas.size()));
  for (auto& p : phis)
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = nd(rng) * (1.0 + j % 17);
  const auto res = render_shap_summary(phis, metas, 15);
  ASSERT_EQ(res.rows.size(), 15u);
  EXPECT_FALSE(res.warning.has_value());

  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t j = 0; j < metas.size(); ++j) {
    double s = 0.0;
    for (const auto& p : phis) s += std::abs(p[j]);
    ranked.emplace_back(-s / phis.size(), j);
  }
  std::sort(ranked.begin(), ranked.end());
  for (std::size_t r = 0; r < 15; ++r) EXPECT_EQ(res.rows[r], ranked[r].second);

  std::size_t rows = 0;
  for (std::size_t p = 0; (p = res.svg.find("<g class=\"row\"", p)) != std::string::npos; ++p) ++rows;
  EXPECT_EQ(rows, 15u);
  EXPECT_NE(res.svg.find("negative values favor TCSI, positive values favor EI"), std::string::npos);
  EXPECT_TRUE(well_formed(res.svg));
}

TEST(Report, SummarySingleRowUsesDescription) {
  const auto metas = band_feature_layout(Band::Theta);
  std::vector<std::vector<double>> phis(3, std::vector<double>(metas.size(), 0.0));
  phis[0][42] = 0.3;
  const auto res = render_shap_summary(phis, metas, 1);
  ASSERT_EQ(res.rows, (std::vector<std::size_t>{42}));
  EXPECT_NE(res.svg.find(xml_escape(metas[42].describe())), std::string::npos);
}

TEST(Report, SummaryAllZeroHasAxisOnly) {
  const auto metas = band_feature_layout(Band::Theta);
  std::vector<std::vector<double>> phis(3, std::vector<double>(metas.size(), 0.0));
  const auto res = render_shap_summary(phis, metas, 10);
  EXPECT_TRUE(res.rows.empty());
  EXPECT_EQ(res.svg.find("<g class=\"row\""), std::string::npos);
  EXPECT_NE(res.svg.find("class=\"axis\""), std::string::npos);
  EXPECT_TRUE(well_formed(res.svg));
}

TEST(Report, SummaryClampsAndRejectsK) {
  const auto metas = band_feature_layout(Band::Theta);
  std::vector<std::vector<double>> phis(2, std::vector<double>(metas.size(), 0.1));
  const auto res = render_shap_summary(phis, metas, 1000);
  ASSERT_TRUE(res.warning.has_value());
  EXPECT_EQ(res.rows.size(), metas.size());
  EXPECT_THROW(render_shap_summary(phis, metas, 0), ConfigError);
}

TEST(Report, ShareTables) {
  std::vector<AttributionReport> reports{random_report(1), random_report(2), random_report(3)};
  for (const auto& r : reports) EXPECT_NO_THROW(check_normalized(r));

  const auto bands = band_shares(reports);
  ASSERT_EQ(bands.size(), 5u);
  double s = 0.0;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    s += bands[i].mean;
    if (i) {
      EXPECT_GE(bands[i - 1].mean, bands[i].mean);
    }
  }
  EXPECT_NEAR(s, 1.0, 1e-9);

  const auto rois = roi_shares(reports);
  ASSERT_EQ(rois.size(), 16u);
  s = 0.0;
  for (const auto& r : rois) s += r.mean;
  EXPECT_NEAR(s, 1.0, 1e-9);

  auto lines = [](const std::string& t) { return static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n')); };
  EXPECT_EQ(lines(band_table_md(reports)), 2u + 5u);
  EXPECT_EQ(lines(roi_table_md(reports)), 2u + 16u);
  const std::array<double, 4> fr{0.15, 0.30, 0.30, 0.25};
  EXPECT_EQ(lines(feature_type_table_md(reports, fr)), 2u + 4u + 10u);

  auto broken = reports[0];
  broken.band[0] += 0.5;
  EXPECT_THROW(check_normalized(broken), Error);
}

TEST(Report, RocCsv) {
  std::vector<double> m(kRocGridPoints, 0.5), sd(kRocGridPoints, 0.1);
  const auto csv = roc_csv(m, sd);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), kRocGridPoints + 1);
  EXPECT_EQ(csv.rfind("fpr,tpr_mean,tpr_sd\n", 0), 0u);
}

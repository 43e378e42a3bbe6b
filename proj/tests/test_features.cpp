#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "attnshift/features.hpp"
#include "feature_oracle.hpp"

using namespace attnshift;

namespace {

BandPowerTensor random_tensor(std::size_t n_frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  BandPowerTensor t;
  t.n_channels = kNumChannels;
  t.n_frames = n_frames;
  t.values.resize(kNumBands * kNumChannels * n_frames);
  for (auto& v : t.values) v = u(rng);
  return t;
}

std::vector<double> features_of(const BandPowerTensor& t, Band b) {
  std::vector<double> out(kFeaturesPerBand);
  std::vector<std::uint8_t> deg(kFeaturesPerBand);
  extract_band_features(t, b, out, deg);
  return out;
}

}  // namespace

TEST(Features, LayoutCounts) {
  const auto layout = band_feature_layout(Band::Gamma);
  ASSERT_EQ(layout.size(), 505u);
  std::array<std::size_t, kNumCategories> per_cat{};
  std::set<std::string> names;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    EXPECT_EQ(layout[i].id, i);
    EXPECT_EQ(layout[i].category, category_of(layout[i].subtype));
    ++per_cat[static_cast<std::size_t>(layout[i].category)];
    names.insert(layout[i].name);
  }
  EXPECT_EQ(names.size(), 505u);
  EXPECT_EQ(per_cat[0], 8u);
  EXPECT_EQ(per_cat[1], 160u);
  EXPECT_EQ(per_cat[2], 208u);
  EXPECT_EQ(per_cat[3], 129u);
  EXPECT_EQ(feature_layout(BandSetting::multi_band()).size(), 5u * 505u);
}

TEST(Features, SubWindowsCoverShortSeries) {
  for (std::size_t n = 1; n <= 20; ++n)
    for (std::size_t w = 0; w < 5; ++w) {
      const auto [a, e] = sub_window(w, n);
      EXPECT_LT(a, e);
      EXPECT_LE(e, n);
    }
  EXPECT_EQ(sub_window(0, 11), (std::pair<std::size_t, std::size_t>{0, 2}));
  EXPECT_EQ(sub_window(4, 11), (std::pair<std::size_t, std::size_t>{8, 11}));
}

class OracleMatch : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OracleMatch, EveryColumnMatchesReference) {
  const std::size_t nf = GetParam();
  for (Band band : {Band::Theta, Band::Gamma}) {
    const auto t = random_tensor(nf, 100 + nf);
    const auto got = features_of(t, band);
    const auto want = oracle::band_features(t, band);
    const auto layout = band_feature_layout(band);
    for (std::size_t j = 0; j < layout.size(); ++j) {
      const auto it = want.find(layout[j].name);
      ASSERT_NE(it, want.end()) << layout[j].name;
      EXPECT_NEAR(got[j], it->second, 1e-9 * std::max(1.0, std::abs(it->second))) << layout[j].name << " F=" << nf;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Frames, OracleMatch, ::testing::Values(3, 4, 5, 11));

TEST(Features, ConstantTensorDegeneratesToFixedValues) {
  BandPowerTensor t;
  t.n_channels = kNumChannels;
  t.n_frames = 11;
  t.values.assign(kNumBands * kNumChannels * 11, 2.0);
  std::vector<double> out(kFeaturesPerBand);
  std::vector<std::uint8_t> deg(kFeaturesPerBand);
  extract_band_features(t, Band::Alpha, out, deg);
  const auto layout = band_feature_layout(Band::Alpha);
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const auto& n = layout[j].name;
    const bool level = n.ends_with(" mean") || n.ends_with("mean power") || n == "global min" ||
                       n == "global max" || n == "global median";
    EXPECT_EQ(out[j], level ? 2.0 : 0.0) << n;
    EXPECT_EQ(deg[j], layout[j].subtype == Subtype::Connectivity ? 1 : 0) << n;
  }
}

TEST(Features, PearsonExamples) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1}, flat{5, 5, 5, 5};
  EXPECT_NEAR(stats::pearson(a, b).r, 1.0, 1e-12);
  EXPECT_NEAR(stats::pearson(a, c).r, -1.0, 1e-12);
  const auto d = stats::pearson(a, flat);
  EXPECT_EQ(d.r, 0.0);
  EXPECT_TRUE(d.degenerate);
}

// Connectivity columns are invariant to a positive affine map of one ROI's series.
TEST(Features, ConnectivityAffineInvariance) {
  auto t = random_tensor(11, 4);
  const auto before = features_of(t, Band::LowBeta);
  const auto& roi = standard_montage().roi("left frontal");
  for (auto c : roi.channel_indices)
    for (std::size_t f = 0; f < 11; ++f) {
      double& v = t.values[(2 * kNumChannels + c) * 11 + f];
      v = 3.0 * v + 7.0;
    }
  const auto after = features_of(t, Band::LowBeta);
  const auto layout = band_feature_layout(Band::LowBeta);
  for (std::size_t j = 0; j < layout.size(); ++j)
    if (layout[j].subtype == Subtype::Connectivity) {
      EXPECT_NEAR(after[j], before[j], 1e-9) << layout[j].name;
    }
}

// Scaling every power by a > 0 scales levels by a, leaves shape statistics,
// correlations, peak times and normalized ratios unchanged.
TEST(Features, ScaleEquivariance) {
  const auto t = random_tensor(11, 5);
  auto s = t;
  const double a = 4.0;
  for (auto& v : s.values) v *= a;
  const auto x = features_of(t, Band::HighBeta);
  const auto y = features_of(s, Band::HighBeta);
  const auto layout = band_feature_layout(Band::HighBeta);
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const auto& n = layout[j].name;
    double factor = a;
    if (n.ends_with("skewness") || n.ends_with("kurtosis") || n.ends_with("peak time") ||
        layout[j].subtype == Subtype::Connectivity || layout[j].subtype == Subtype::HemisphericAsymmetry ||
        n.ends_with("normalized difference"))
      factor = 1.0;
    else if (n.ends_with("variance"))
      factor = a * a;
    EXPECT_NEAR(y[j], factor * x[j], 1e-9 * std::max(1.0, std::abs(y[j]))) << n;
  }
}

TEST(Features, ValueRanges) {
  const auto t = random_tensor(11, 6);
  const auto x = features_of(t, Band::Gamma);
  const auto layout = band_feature_layout(Band::Gamma);
  for (std::size_t j = 0; j < layout.size(); ++j) {
    EXPECT_TRUE(std::isfinite(x[j])) << layout[j].name;
    const auto st = layout[j].subtype;
    if (st == Subtype::Connectivity || st == Subtype::HemisphericAsymmetry) {
      EXPECT_GE(x[j], -1.0);
      EXPECT_LE(x[j], 1.0);
    }
    if (layout[j].name.ends_with("peak time")) {
      EXPECT_GE(x[j], 0.0);
      EXPECT_LE(x[j], 1.0);
    }
    if (st == Subtype::RoiSpatialSd || st == Subtype::RoiSpatialRange) {
      EXPECT_GE(x[j], 0.0);
    }
  }
}

TEST(Features, MultiBandConcatenatesSingleBands) {
  std::vector<BandPowerTensor> ts{random_tensor(11, 7), random_tensor(11, 8)};
  std::vector<Label> labels{Label::EI, Label::TCSI};
  const auto multi = extract(ts, labels, BandSetting::multi_band());
  const auto gamma = extract(ts, labels, BandSetting::single(Band::Gamma));
  ASSERT_EQ(multi.n_cols, 2525u);
  ASSERT_EQ(gamma.n_cols, 505u);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 505; ++j) EXPECT_EQ(multi.at(i, 4 * 505 + j), gamma.at(i, j));
  EXPECT_EQ(extract(ts, labels, BandSetting::multi_band(), 4).values, multi.values);
}

TEST(Features, ShapeErrors) {
  BandPowerTensor t;
  t.n_channels = 32;
  t.n_frames = 11;
  t.values.assign(kNumBands * 32 * 11, 1.0);
  std::vector<double> out(kFeaturesPerBand);
  std::vector<std::uint8_t> deg(kFeaturesPerBand);
  EXPECT_THROW(extract_band_features(t, Band::Gamma, out, deg), DimensionError);
  std::vector<Label> labels{Label::EI};
  std::vector<BandPowerTensor> two{random_tensor(11, 1), random_tensor(11, 2)};
  EXPECT_THROW(extract(two, labels, BandSetting::multi_band()), DimensionError);
}

TEST(Features, MatrixRoundTrip) {
  std::vector<BandPowerTensor> ts{random_tensor(11, 9), random_tensor(11, 10), random_tensor(11, 11)};
  std::vector<Label> labels{Label::EI, Label::TCSI, Label::EI};
  const auto fm = extract(ts, labels, BandSetting::single(Band::Alpha));
  const auto stem = (std::filesystem::temp_directory_path() / "attnshift_test_fm").string();
  write_feature_matrix(stem, fm);
  const auto back = read_feature_matrix(stem);
  EXPECT_EQ(back.metas, fm.metas);
  EXPECT_EQ(back.labels, fm.labels);
  ASSERT_EQ(back.values.size(), fm.values.size());
  for (std::size_t i = 0; i < fm.values.size(); ++i) EXPECT_FLOAT_EQ(back.values[i], fm.values[i]);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "attnshift/selection.hpp"

using namespace attnshift;

namespace {

FeatureMatrix random_matrix(const BandSetting& s, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  FeatureMatrix fm;
  fm.setting = s;
  fm.metas = feature_layout(s);
  fm.n_rows = rows;
  fm.n_cols = fm.metas.size();
  fm.values.resize(rows * fm.n_cols);
  for (std::size_t i = 0; i < rows; ++i) {
    fm.labels.push_back(i % 2 == 0 ? Label::EI : Label::TCSI);
    for (std::size_t j = 0; j < fm.n_cols; ++j) {
      // Columns carry a column-specific class shift so F varies across the pool.
      const double shift = (fm.labels[i] == Label::TCSI ? 1.0 : 0.0) * std::sin(static_cast<double>(j));
      fm.values[i * fm.n_cols + j] = nd(rng) + shift;
    }
  }
  fm.degenerate_counts.assign(fm.n_cols, 0);
  return fm;
}

// Squared pooled two-sample t statistic; equals the two-group ANOVA F.
double pooled_t_squared(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  auto ss = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double na = a.size(), nb = b.size();
  const double sp2 = (ss(a) + ss(b)) / (na + nb - 2.0);
  const double t = (mean(a) - mean(b)) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
  return t * t;
}

}  // namespace

TEST(Selection, AnovaExamples) {
  const std::vector<Label> y{Label::EI, Label::EI, Label::TCSI, Label::TCSI};
  EXPECT_EQ(anova_f(std::vector<double>{1, 2, 2, 1}, y), 0.0);
  EXPECT_TRUE(std::isinf(anova_f(std::vector<double>{0, 0, 1, 1}, y)));
  EXPECT_EQ(anova_f(std::vector<double>{3, 3, 3, 3}, y), 0.0);
  const std::vector<Label> short_y{Label::EI, Label::TCSI, Label::TCSI};
  EXPECT_THROW(anova_f(std::vector<double>{1, 2, 3}, short_y), Error);
}

TEST(Selection, AnovaMatchesPooledT) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(5 + rep % 7), b(4 + rep % 5), v;
    std::vector<Label> y;
    for (auto& x : a) {
      x = nd(rng);
      v.push_back(x);
      y.push_back(Label::EI);
    }
    for (auto& x : b) {
      x = nd(rng) + 0.5;
      v.push_back(x);
      y.push_back(Label::TCSI);
    }
    const double ref = pooled_t_squared(a, b);
    EXPECT_NEAR(anova_f(v, y), ref, 1e-9 * std::max(1.0, ref));
  }
}

TEST(Selection, ApportionSumsToTotal) {
  const std::array<double, 4> fr{0.15, 0.30, 0.30, 0.25};
  EXPECT_EQ(apportion(500, fr), (std::array<std::size_t, 4>{75, 150, 150, 125}));
  EXPECT_EQ(apportion(100, fr), (std::array<std::size_t, 4>{15, 30, 30, 25}));
  for (std::size_t t = 1; t < 200; ++t) {
    const auto a = apportion(t, fr);
    EXPECT_EQ(a[0] + a[1] + a[2] + a[3], t);
  }
}

TEST(Selection, SingleBandBudget) {
  const auto fm = random_matrix(BandSetting::single(Band::Gamma), 20, 2);
  const auto plan = select_features(fm);
  EXPECT_EQ(plan.selected.size(), 100u);
  EXPECT_EQ(plan.category_budgets, (std::array<std::size_t, 4>{15, 30, 30, 25}));
  // The global pool holds 8 columns; all of them are taken and the shortfall moves on.
  EXPECT_EQ(plan.category_selected[0], 8u);
  EXPECT_TRUE(std::is_sorted(plan.selected.begin(), plan.selected.end()));
  EXPECT_EQ(std::adjacent_find(plan.selected.begin(), plan.selected.end()), plan.selected.end());
}

TEST(Selection, MultiBandBudgets) {
  const auto fm = random_matrix(BandSetting::multi_band(), 20, 3);
  const auto plan = select_features(fm);
  EXPECT_EQ(plan.selected.size(), 500u);
  EXPECT_EQ(plan.category_budgets, (std::array<std::size_t, 4>{75, 150, 150, 125}));
  EXPECT_EQ(plan.category_selected[0], 40u);
  std::size_t total = 0;
  for (auto n : plan.category_selected) total += n;
  EXPECT_EQ(total, 500u);
  // Each band receives its equal share of each non-global category.
  for (const auto& s : plan.strata)
    if (s.category != Category::Global) {
      EXPECT_GE(s.selected, s.nominal);
    }
}

// Within a stratum the kept columns are exactly its top-ranked ones.
TEST(Selection, StrataKeepTopRanked) {
  const auto fm = random_matrix(BandSetting::multi_band(), 24, 4);
  const auto plan = select_features(fm);
  std::vector<bool> chosen(fm.n_cols, false);
  for (auto j : plan.selected) chosen[j] = true;
  for (std::size_t a = 0; a < fm.n_cols; ++a)
    for (std::size_t b = 0; b < fm.n_cols; ++b) {
      if (!chosen[a] || chosen[b]) continue;
      if (fm.metas[a].band != fm.metas[b].band || fm.metas[a].category != fm.metas[b].category) continue;
      EXPECT_GE(plan.all_f_scores[a], plan.all_f_scores[b]) << a << " vs " << b;
    }
}

TEST(Selection, DuplicateColumnsTieBreakByIndex) {
  auto fm = random_matrix(BandSetting::single(Band::Alpha), 20, 5);
  // Make every temporal column identical: the lowest indices must win.
  std::vector<std::size_t> temporal;
  for (std::size_t j = 0; j < fm.n_cols; ++j)
    if (fm.metas[j].category == Category::IntraRoiTemporal) temporal.push_back(j);
  for (std::size_t i = 0; i < fm.n_rows; ++i)
    for (auto j : temporal) fm.values[i * fm.n_cols + j] = fm.values[i * fm.n_cols + temporal[0]];
  const auto plan = select_features(fm);
  std::vector<std::size_t> kept;
  for (auto j : plan.selected)
    if (fm.metas[j].category == Category::IntraRoiTemporal) kept.push_back(j);
  ASSERT_GE(kept.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(kept[i], temporal[i]);
}

TEST(Selection, IgnoresRowsOutsideTraining) {
  auto fm = random_matrix(BandSetting::single(Band::Theta), 30, 6);
  std::vector<std::size_t> train(20);
  std::iota(train.begin(), train.end(), std::size_t{0});
  const auto before = select_features(fm, train);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (std::size_t i = 20; i < 30; ++i)
    for (std::size_t j = 0; j < fm.n_cols; ++j) fm.values[i * fm.n_cols + j] = 100.0 * nd(rng);
  EXPECT_EQ(select_features(fm, train), before);
}

TEST(Selection, InvariantToShiftAndRowOrder) {
  const auto fm = random_matrix(BandSetting::single(Band::HighBeta), 26, 7);
  const auto base = select_features(fm);

  auto shifted = fm;
  for (auto& v : shifted.values) v += 12.5;
  EXPECT_EQ(select_features(shifted).selected, base.selected);

  auto permuted = fm;
  std::vector<std::size_t> order(fm.n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
  for (std::size_t i = 0; i < fm.n_rows; ++i) {
    permuted.labels[i] = fm.labels[order[i]];
    for (std::size_t j = 0; j < fm.n_cols; ++j) permuted.values[i * fm.n_cols + j] = fm.at(order[i], j);
  }
  EXPECT_EQ(select_features(permuted).selected, base.selected);

  // Swapping class names leaves F unchanged.
  auto relabeled = fm;
  for (auto& l : relabeled.labels) l = l == Label::EI ? Label::TCSI : Label::EI;
  EXPECT_EQ(select_features(relabeled).selected, base.selected);
}

TEST(Selection, RejectsBadConfig) {
  const auto fm = random_matrix(BandSetting::single(Band::Gamma), 10, 8);
  SelectionConfig c;
  c.fractions = {0.5, 0.5, 0.5, 0.5};
  EXPECT_THROW(select_features(fm, c), ConfigError);
  c = {};
  c.total_budget = 600;
  EXPECT_THROW(select_features(fm, c), ConfigError);
}

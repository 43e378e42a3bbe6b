#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "attnshift/eval.hpp"

using namespace attnshift;

namespace {

std::vector<Label> labels_of(std::size_t n_ei, std::size_t n_tcsi) {
  std::vector<Label> y(n_ei, Label::EI);
  y.insert(y.end(), n_tcsi, Label::TCSI);
  return y;
}

// Count of (positive, negative) pairs ranked correctly, ties counted half.
double mann_whitney_auc(const std::vector<double>& s, const std::vector<Label>& y) {
  double hit = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != Label::TCSI || y[j] != Label::EI) continue;
      pairs += 1.0;
      hit += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  return hit / pairs;
}

GenConfig small_gen(std::uint64_t seed, double separability = 0.3) {
  GenConfig g;
  g.n_subjects = 3;
  g.trials_min = 40;
  g.trials_max = 48;
  g.separability = separability;
  g.seed = seed;
  return g;
}

PipelineConfig small_pipeline(BandSetting s = BandSetting::single(Band::Gamma)) {
  PipelineConfig p;
  p.setting = s;
  p.forest.n_trees = 30;
  return p;
}

}  // namespace

TEST(Eval, FoldsAreStratifiedAndDisjoint) {
  const auto y = labels_of(10, 10);
  const auto split = stratified_kfold(y, 2, 1);
  ASSERT_EQ(split.folds.size(), 2u);
  for (const auto& f : split.folds) {
    EXPECT_EQ(f.size(), 10u);
    std::size_t tcsi = 0;
    for (auto i : f) tcsi += y[i] == Label::TCSI;
    EXPECT_EQ(tcsi, 5u);
  }
  std::set<std::size_t> all;
  for (const auto& f : split.folds) all.insert(f.begin(), f.end());
  EXPECT_EQ(all.size(), 20u);
}

TEST(Eval, UnevenFoldSizes) {
  const auto split = stratified_kfold(labels_of(16, 15), 3, 4);
  std::vector<std::size_t> sizes;
  for (const auto& f : split.folds) sizes.push_back(f.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 10, 11}));
}

TEST(Eval, TooFewMembersThrows) {
  const auto y = labels_of(30, 2);
  try {
    stratified_kfold(y, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("TCSI"), std::string::npos) << e.what();
  }
  EXPECT_THROW(stratified_kfold(y, 1, 1), ConfigError);
}

TEST(Eval, FoldsDeterministicInSeed) {
  const auto y = labels_of(25, 20);
  EXPECT_EQ(stratified_kfold(y, 3, 9).folds, stratified_kfold(y, 3, 9).folds);
  EXPECT_NE(stratified_kfold(y, 3, 9).folds, stratified_kfold(y, 3, 10).folds);
}

TEST(Eval, AucExamples) {
  const std::vector<Label> y{Label::EI, Label::EI, Label::TCSI, Label::TCSI};
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y), 0.0);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<Label>{Label::EI, Label::EI}), Error);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<double>{0.1, 0.5, 0.51, 0.9}, y), 1.0);
}

TEST(Eval, AucMatchesPairCounting) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<double> s;
    std::vector<Label> y;
    for (int i = 0; i < 30; ++i) {
      y.push_back(i % 3 == 0 ? Label::TCSI : Label::EI);
      s.push_back(coarse(rng) / 5.0 + (y.back() == Label::TCSI ? 0.1 : 0.0));
    }
    EXPECT_NEAR(auc(s, y), mann_whitney_auc(s, y), 1e-12);
  }
}

TEST(Eval, RocInvariants) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<double> s;
  std::vector<Label> y;
  for (int i = 0; i < 50; ++i) {
    s.push_back(u(rng));
    y.push_back(i % 2 ? Label::TCSI : Label::EI);
  }
  const auto roc = roc_curve(s, y);
  EXPECT_EQ(roc.fpr.front(), 0.0);
  EXPECT_EQ(roc.tpr.front(), 0.0);
  EXPECT_EQ(roc.fpr.back(), 1.0);
  EXPECT_EQ(roc.tpr.back(), 1.0);
  EXPECT_TRUE(std::isinf(roc.thresholds.front()));
  for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
    EXPECT_GE(roc.fpr[i], roc.fpr[i - 1]);
    EXPECT_GE(roc.tpr[i], roc.tpr[i - 1]);
  }
  const auto grid = roc_on_grid(roc);
  ASSERT_EQ(grid.size(), kRocGridPoints);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(grid.back(), 1.0);
  // A monotone map of the scores leaves the curve unchanged.
  std::vector<double> t;
  for (double v : s) t.push_back(v * v * v + 2.0);
  const auto roc2 = roc_curve(t, y);
  EXPECT_EQ(roc2.fpr, roc.fpr);
  EXPECT_EQ(roc2.tpr, roc.tpr);
}

TEST(Eval, MeanSdIsPopulation) {
  const auto m = mean_sd(std::vector<double>{1.0, 3.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.0);
  EXPECT_DOUBLE_EQ(m.sd, 1.0);
}

TEST(Eval, WithinSubjectProducesThreeFolds) {
  const auto sets = generate(small_gen(1));
  const auto cfg = small_pipeline();
  const auto r = run_within_subject(sets[0], cfg);
  ASSERT_EQ(r.folds.size(), 3u);
  std::size_t n_test = 0;
  for (const auto& f : r.folds) {
    EXPECT_EQ(f.n_selected, 100u);
    EXPECT_GE(f.auc, 0.0);
    EXPECT_LE(f.auc, 1.0);
    n_test += f.n_test;
  }
  EXPECT_EQ(n_test, sets[0].trials.size());
  ASSERT_TRUE(r.shap.has_value());
  EXPECT_LE(r.max_local_accuracy_error, 1e-9);
  EXPECT_EQ(r.mean_roc.size(), kRocGridPoints);
}

TEST(Eval, WithinSubjectDeterministicAcrossJobs) {
  const auto sets = generate(small_gen(2));
  const auto cfg = small_pipeline();
  const auto a = run_within_subject(sets[1], cfg, 1);
  const auto b = run_within_subject(sets[1], cfg, 3);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Eval, PermutedLabelsKeepClassCounts) {
  const auto y = labels_of(20, 13);
  auto p = permuted_labels(y, 5);
  EXPECT_NE(p, y);
  std::sort(p.begin(), p.end());
  auto sorted = y;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(p, sorted);
}

TEST(Eval, LosoNeedsTwoSubjects) {
  const auto sets = generate(small_gen(3));
  const auto cfg = small_pipeline();
  EXPECT_THROW(run_loso(std::span<const TrialSet>(sets.data(), 1), cfg), Error);
  const auto r = run_loso(sets, cfg);
  ASSERT_EQ(r.subjects.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.subjects[i].subject_id, sets[i].subject_id);
    EXPECT_EQ(r.subjects[i].n_test, sets[i].trials.size());
  }
}

TEST(Eval, RoiGridCellsAreAucs) {
  auto gen = small_gen(4);
  gen.n_subjects = 1;
  const auto sets = generate(gen);
  auto cfg = small_pipeline();
  cfg.forest.n_trees = 10;
  const auto grid = roi_band_importance(sets[0], cfg, 2);
  for (std::size_t r = 0; r < kNumRois; ++r)
    for (std::size_t s = 0; s < kGridSettings; ++s) {
      EXPECT_GE(grid.auc[r][s], 0.0);
      EXPECT_LE(grid.auc[r][s], 1.0);
      EXPECT_FALSE(grid.empty[r][s]);
      // Six spatial statistics, four channel means, ten window and three dynamics columns.
      EXPECT_EQ(grid.n_features[r][s], s < kNumBands ? 23u : 115u);
    }
  EXPECT_EQ(to_json(grid).dump(), to_json(roi_band_importance(sets[0], cfg, 1)).dump());
}

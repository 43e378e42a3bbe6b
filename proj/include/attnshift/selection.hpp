#pragma once

// Stratified ANOVA-F selection: features are ranked within each (band,
// category) stratum and drawn against per-category budgets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/common.hpp"
#include "attnshift/features.hpp"

namespace attnshift {

// One-way ANOVA F for two classes. Zero within-class variance with distinct
// class means yields +infinity; with equal means it yields 0.
inline double anova_f(std::span<const double> values, std::span<const Label> labels) {
  if (values.size() != labels.size()) throw DimensionError("anova_f: values and labels differ in length");
  std::array<double, 2> sum{0.0, 0.0};
  std::array<std::size_t, 2> n{0, 0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int g = label_index(labels[i]);
    sum[g] += values[i];
    ++n[g];
  }
  for (int g = 0; g < 2; ++g)
    if (n[g] < 2)
      throw Error(std::string("anova_f: class ") + label_name(static_cast<Label>(g)) + " has fewer than 2 samples");
  const std::size_t total = n[0] + n[1];
  const std::array<double, 2> mean{sum[0] / static_cast<double>(n[0]), sum[1] / static_cast<double>(n[1])};
  const double grand = (sum[0] + sum[1]) / static_cast<double>(total);
  double within = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean[label_index(labels[i])];
    within += d * d;
  }
  double between = 0.0;
  for (int g = 0; g < 2; ++g) between += static_cast<double>(n[g]) * (mean[g] - grand) * (mean[g] - grand);
  const double ms_within = within / static_cast<double>(total - 2);
  if (ms_within == 0.0) return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return between / ms_within;
}

struct SelectionConfig {
  // 0 = 500 for multi-band, 100 for single-band.
  std::size_t total_budget = 0;
  std::array<double, kNumCategories> fractions{0.15, 0.30, 0.30, 0.25};

  std::size_t budget_for(const BandSetting& s) const {
    if (total_budget != 0) return total_budget;
    return s.multi ? 500 : 100;
  }
};

struct StratumAllocation {
  Band band = Band::Theta;
  Category category = Category::Global;
  std::size_t pool = 0;
  std::size_t nominal = 0;
  std::size_t selected = 0;
};

struct SelectionPlan {
  std::size_t total_budget = 0;
  std::array<double, kNumCategories> fractions{};
  std::array<std::size_t, kNumCategories> category_budgets{};  // nominal, before shortfall redistribution
  std::array<std::size_t, kNumCategories> category_selected{};
  std::vector<StratumAllocation> strata;
  std::vector<std::size_t> selected;  // column indices, ascending
  std::vector<double> f_scores;       // F for each selected column
  std::vector<double> all_f_scores;   // F for every column

  bool operator==(const SelectionPlan& o) const {
    return total_budget == o.total_budget && category_budgets == o.category_budgets &&
           category_selected == o.category_selected && selected == o.selected && f_scores == o.f_scores;
  }
};

// Largest-remainder split of `total` by `fractions`.
inline std::array<std::size_t, kNumCategories> apportion(std::size_t total,
                                                         const std::array<double, kNumCategories>& fractions) {
  std::array<std::size_t, kNumCategories> out{};
  std::array<double, kNumCategories> rem{};
  std::size_t used = 0;
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    const double exact = fractions[c] * static_cast<double>(total);
    out[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[c] = exact - static_cast<double>(out[c]);
    used += out[c];
  }
  std::array<std::size_t, kNumCategories> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; used < total; ++i, ++used) ++out[order[i % kNumCategories]];
  return out;
}

inline SelectionPlan select_features(const FeatureMatrix& fm, std::span<const std::size_t> train_rows,
                                     const SelectionConfig& cfg = {}, std::size_t jobs = 1) {
  const double fsum = std::accumulate(cfg.fractions.begin(), cfg.fractions.end(), 0.0);
  if (std::abs(fsum - 1.0) > 1e-9) throw ConfigError("selection fractions must sum to 1");
  const std::size_t budget = cfg.budget_for(fm.setting);
  if (fm.n_cols < budget)
    throw ConfigError("feature pool of " + std::to_string(fm.n_cols) + " is smaller than the budget of " +
                      std::to_string(budget));

  std::vector<Label> labels;
  labels.reserve(train_rows.size());
  for (auto r : train_rows) labels.push_back(fm.labels[r]);

  SelectionPlan plan;
  plan.total_budget = budget;
  plan.fractions = cfg.fractions;
  plan.all_f_scores.assign(fm.n_cols, 0.0);
  parallel_for(fm.n_cols, jobs, [&](std::size_t j) {
    std::vector<double> col;
    col.reserve(train_rows.size());
    for (auto r : train_rows) col.push_back(fm.at(r, j));
    const double f = anova_f(col, labels);
    plan.all_f_scores[j] = std::isnan(f) ? 0.0 : f;
  });
  const auto& F = plan.all_f_scores;
  auto better = [&](std::size_t a, std::size_t b) { return F[a] != F[b] ? F[a] > F[b] : a < b; };

  // Strata in (category, band) order, members ranked best-first.
  const auto bands = fm.setting.bands();
  struct Stratum {
    std::size_t band_pos;
    Category category;
    std::vector<std::size_t> ranked;
    std::size_t taken = 0;
    std::size_t nominal = 0;
  };
  std::vector<Stratum> strata;
  for (std::size_t c = 0; c < kNumCategories; ++c)
    for (std::size_t bp = 0; bp < bands.size(); ++bp) strata.push_back({bp, static_cast<Category>(c), {}, 0, 0});
  auto stratum_of = [&](const FeatureMeta& m) -> Stratum& {
    const auto bp = static_cast<std::size_t>(std::find(bands.begin(), bands.end(), m.band) - bands.begin());
    if (bp == bands.size()) throw DimensionError("feature band not part of the matrix band setting");
    return strata[static_cast<std::size_t>(m.category) * bands.size() + bp];
  };
  for (std::size_t j = 0; j < fm.n_cols; ++j) stratum_of(fm.metas[j]).ranked.push_back(j);
  for (auto& s : strata) std::sort(s.ranked.begin(), s.ranked.end(), better);

  plan.category_budgets = apportion(budget, cfg.fractions);
  std::vector<bool> chosen(fm.n_cols, false);
  std::size_t global_surplus = 0;

  for (std::size_t c = 0; c < kNumCategories; ++c) {
    std::vector<Stratum*> cat;
    for (auto& s : strata)
      if (static_cast<std::size_t>(s.category) == c && !s.ranked.empty()) cat.push_back(&s);
    const std::size_t want = plan.category_budgets[c];
    if (cat.empty()) {
      global_surplus += want;
      continue;
    }
    const std::size_t base = want / cat.size();
    std::size_t rem = want % cat.size();
    for (auto* s : cat) s->nominal = base;
    // Remainder goes to the bands whose best leftover after `base` ranks highest.
    std::vector<Stratum*> eligible;
    for (auto* s : cat)
      if (s->ranked.size() > base) eligible.push_back(s);
    std::sort(eligible.begin(), eligible.end(),
              [&](Stratum* a, Stratum* b) { return better(a->ranked[base], b->ranked[base]); });
    for (std::size_t i = 0; i < eligible.size() && rem > 0; ++i, --rem) ++eligible[i]->nominal;
    std::size_t surplus = rem;  // remainder that no band could absorb
    for (auto* s : cat) {
      s->taken = std::min(s->nominal, s->ranked.size());
      surplus += s->nominal - s->taken;
      for (std::size_t i = 0; i < s->taken; ++i) chosen[s->ranked[i]] = true;
    }
    // Shortfall moves to the same category's other bands, best leftovers first.
    std::vector<std::size_t> leftovers;
    for (auto* s : cat)
      for (std::size_t i = s->taken; i < s->ranked.size(); ++i) leftovers.push_back(s->ranked[i]);
    std::sort(leftovers.begin(), leftovers.end(), better);
    for (std::size_t i = 0; i < leftovers.size() && surplus > 0; ++i, --surplus) {
      chosen[leftovers[i]] = true;
      ++stratum_of(fm.metas[leftovers[i]]).taken;
    }
    global_surplus += surplus;
  }

  if (global_surplus > 0) {
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < fm.n_cols; ++j)
      if (!chosen[j]) rest.push_back(j);
    std::sort(rest.begin(), rest.end(), better);
    for (std::size_t i = 0; i < global_surplus; ++i) {
      chosen[rest[i]] = true;
      ++stratum_of(fm.metas[rest[i]]).taken;
    }
  }

  for (std::size_t j = 0; j < fm.n_cols; ++j)
    if (chosen[j]) {
      plan.selected.push_back(j);
      plan.f_scores.push_back(F[j]);
      ++plan.category_selected[static_cast<std::size_t>(fm.metas[j].category)];
    }
  for (const auto& s : strata)
    plan.strata.push_back({bands[s.band_pos], s.category, s.ranked.size(), s.nominal, s.taken});
  if (plan.selected.size() != budget) throw Error("selection produced " + std::to_string(plan.selected.size()) + " features");
  return plan;
}

inline SelectionPlan select_features(const FeatureMatrix& fm, const SelectionConfig& cfg = {}, std::size_t jobs = 1) {
  std::vector<std::size_t> rows(fm.n_rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return select_features(fm, rows, cfg, jobs);
}

inline nlohmann::json to_json(const SelectionPlan& p, const FeatureMatrix& fm) {
  nlohmann::json j;
  j["total_budget"] = p.total_budget;
  j["fractions"] = p.fractions;
  nlohmann::json cats;
  for (std::size_t c = 0; c < kNumCategories; ++c)
    cats[category_name(static_cast<Category>(c))] = {{"budget", p.category_budgets[c]},
                                                     {"selected", p.category_selected[c]}};
  j["categories"] = cats;
  auto& strata = j["strata"] = nlohmann::json::array();
  for (const auto& s : p.strata)
    strata.push_back({{"band", band_name(s.band)}, {"category", category_name(s.category)}, {"pool", s.pool},
                      {"nominal", s.nominal}, {"selected", s.selected}});
  auto& sel = j["selected"] = nlohmann::json::array();
  for (std::size_t i = 0; i < p.selected.size(); ++i) {
    const double f = p.f_scores[i];
    sel.push_back({{"id", fm.metas[p.selected[i]].id},
                   {"f", std::isinf(f) ? nlohmann::json("inf") : nlohmann::json(f)}});
  }
  return j;
}

}  // namespace attnshift

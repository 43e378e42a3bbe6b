#pragma once

// Stratified cross-validation, ROC/AUC, and the within-subject, leave-one-
// subject-out and ROI-restricted evaluation schemes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/common.hpp"
#include "attnshift/features.hpp"
#include "attnshift/forest.hpp"
#include "attnshift/selection.hpp"
#include "attnshift/shap.hpp"
#include "attnshift/synthgen.hpp"

namespace attnshift {

// --- folds -------------------------------------------------------------------

struct CvSplit {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> folds;  // test indices per fold, ascending

  std::vector<std::size_t> train(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f)
      if (f != fold) out.insert(out.end(), folds[f].begin(), folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Each class is shuffled and dealt round-robin; the second class continues where
// the first stopped so total fold sizes also differ by at most one.
inline CvSplit stratified_kfold(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[label_index(labels[i])].push_back(i);
  for (Label l : {Label::TCSI, Label::EI})
    if (members[label_index(l)].size() < k)
      throw Error(std::string("class ") + label_name(l) + " has fewer members than k");
  CvSplit split;
  split.k = k;
  split.seed = seed;
  split.folds.assign(k, {});
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    for (auto i : m) split.folds[next++ % k].push_back(i);
  }
  for (auto& f : split.folds) std::sort(f.begin(), f.end());
  return split;
}

// --- metrics -----------------------------------------------------------------

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;  // first entry is +inf
};

// Positives are TCSI; scores are P(TCSI). Tied scores form one ROC step.
inline RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw DimensionError("roc_curve: scores and labels differ in length");
  std::size_t pos = 0;
  for (auto l : labels) pos += l == Label::TCSI;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error("ROC/AUC requires both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == Label::TCSI ? tp : fp) += 1;
      ++i;
    }
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    roc.thresholds.push_back(s);
  }
  return roc;
}

inline double roc_area(const RocCurve& roc) {
  double a = 0.0;
  for (std::size_t i = 1; i < roc.fpr.size(); ++i)
    a += (roc.fpr[i] - roc.fpr[i - 1]) * (roc.tpr[i] + roc.tpr[i - 1]) / 2.0;
  return a;
}

// Trapezoidal AUC; ties contribute half credit.
inline double auc(std::span<const double> scores, std::span<const Label> labels) {
  return roc_area(roc_curve(scores, labels));
}

// Predicts TCSI when P(TCSI) > 0.5.
inline double accuracy(std::span<const double> scores, std::span<const Label> labels, double threshold = 0.5) {
  if (scores.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) ok += (scores[i] > threshold) == (labels[i] == Label::TCSI);
  return static_cast<double>(ok) / static_cast<double>(scores.size());
}

inline constexpr std::size_t kRocGridPoints = 101;

// TPR at each point of a uniform FPR grid; at vertical ROC segments the upper end is used.
inline std::vector<double> roc_on_grid(const RocCurve& roc) {
  std::vector<double> out(kRocGridPoints);
  for (std::size_t g = 0; g < kRocGridPoints; ++g) {
    const double f = static_cast<double>(g) / static_cast<double>(kRocGridPoints - 1);
    std::size_t i = 0;
    while (i + 1 < roc.fpr.size() && roc.fpr[i + 1] <= f) ++i;
    if (i + 1 == roc.fpr.size() || roc.fpr[i] == f) {
      out[g] = roc.tpr[i];
    } else {
      const double t = (f - roc.fpr[i]) / (roc.fpr[i + 1] - roc.fpr[i]);
      out[g] = roc.tpr[i] + t * (roc.tpr[i + 1] - roc.tpr[i]);
    }
  }
  return out;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

// Population sd.
inline MeanSd mean_sd(std::span<const double> v) {
  if (v.empty()) return {};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

// --- pipeline ------------------------------------------------------------------

struct PipelineConfig {
  BandSetting setting = BandSetting::multi_band();
  SelectionConfig selection;
  ForestConfig forest;
  StftConfig stft;
  std::size_t k = 3;
  std::uint64_t seed = 1;
  bool permute_labels = false;
  bool compute_shap = true;
};

struct FoldResult {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t n_selected = 0;
  std::array<std::size_t, kNumCategories> category_budgets{};
  std::array<std::size_t, kNumCategories> category_selected{};
  RocCurve roc;
  std::vector<std::size_t> selected_ids;
};

struct SubjectResult {
  std::string subject_id;
  std::size_t n_trials = 0;
  std::size_t n_tcsi = 0;
  std::vector<FoldResult> folds;
  MeanSd accuracy;
  MeanSd auc;
  std::vector<double> mean_roc;  // on the FPR grid
  std::vector<double> sd_roc;
  std::optional<AttributionReport> shap;
  double max_local_accuracy_error = 0.0;
  std::size_t n_explained = 0;
  // Per test trial, attributions in full-matrix column space (kept only on request).
  std::vector<Attribution> attributions;
  std::vector<std::size_t> attribution_rows;  // feature-matrix row of each attribution
};

inline std::uint64_t string_seed(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

inline std::vector<Label> permuted_labels(std::span<const Label> labels, std::uint64_t seed) {
  std::vector<Label> out(labels.begin(), labels.end());
  std::mt19937_64 rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

struct SubjectData {
  std::string subject_id;
  FeatureMatrix features;  // all trials, full pool for the band setting
};

inline SubjectData prepare_subject(const TrialSet& ts, const PipelineConfig& cfg, std::size_t jobs = 1) {
  SubjectData d{ts.subject_id, extract_trialset(ts, cfg.setting, cfg.stft, jobs)};
  if (cfg.permute_labels)
    d.features.labels = permuted_labels(d.features.labels, derive_seed(cfg.seed, string_seed(ts.subject_id), 0xBEEF));
  return d;
}

struct FoldModel {
  SelectionPlan plan;
  ForestModel model;
};

// Selection and forest fit on `train` rows only.
inline FoldModel train_fold(const FeatureMatrix& fm, std::span<const std::size_t> train, const PipelineConfig& cfg,
                            std::uint64_t forest_seed, std::size_t jobs = 1) {
  FoldModel out;
  out.plan = select_features(fm, train, cfg.selection, jobs);
  const FeatureMatrix xt = fm.subset(train, out.plan.selected);
  ForestConfig fc = cfg.forest;
  fc.seed = forest_seed;
  out.model = fit_forest({xt.values.data(), xt.n_rows, xt.n_cols}, xt.labels, fc, jobs);
  out.model.feature_map = out.plan.selected;
  return out;
}

inline std::vector<double> gather(std::span<const double> row, std::span<const std::size_t> cols) {
  std::vector<double> x(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) x[j] = row[cols[j]];
  return x;
}

inline SubjectResult evaluate_subject(const SubjectData& data, const PipelineConfig& cfg, std::size_t jobs = 1,
                                      bool keep_attributions = false,
                                      std::vector<ForestModel>* fold_models = nullptr) {
  const FeatureMatrix& fm = data.features;
  const std::uint64_t subject_seed = derive_seed(cfg.seed, string_seed(data.subject_id));
  const CvSplit split = stratified_kfold(fm.labels, cfg.k, subject_seed);

  SubjectResult res;
  res.subject_id = data.subject_id;
  res.n_trials = fm.n_rows;
  for (auto l : fm.labels) res.n_tcsi += l == Label::TCSI;

  std::vector<std::vector<double>> phis;
  std::vector<double> accs, aucs;
  std::vector<std::vector<double>> grids;
  for (std::size_t f = 0; f < split.folds.size(); ++f) {
    const auto train = split.train(f);
    const auto& test = split.folds[f];
    const FoldModel fold = train_fold(fm, train, cfg, derive_seed(subject_seed, f, 0xF0), jobs);

    std::vector<double> scores;
    std::vector<Label> truth;
    for (auto i : test) {
      const auto x = gather(fm.row(i), fold.plan.selected);
      scores.push_back(predict_proba(fold.model, x)[1]);
      truth.push_back(fm.labels[i]);
      if (cfg.compute_shap) {
        const Attribution a = tree_shap(fold.model, x);
        double total = a.base;
        for (double v : a.phi) total += v;
        res.max_local_accuracy_error = std::max(res.max_local_accuracy_error, std::abs(total - a.output));
        ++res.n_explained;
        std::vector<double> full(fm.n_cols, 0.0);
        for (std::size_t j = 0; j < fold.plan.selected.size(); ++j) full[fold.plan.selected[j]] = a.phi[j];
        if (keep_attributions) {
          res.attributions.push_back({full, a.base, a.output});
          res.attribution_rows.push_back(i);
        }
        phis.push_back(std::move(full));
      }
    }
    if (fold_models) fold_models->push_back(fold.model);
    FoldResult fr;
    fr.n_train = train.size();
    fr.n_test = test.size();
    fr.roc = roc_curve(scores, truth);
    fr.auc = roc_area(fr.roc);
    fr.accuracy = accuracy(scores, truth);
    fr.n_selected = fold.plan.selected.size();
    fr.category_budgets = fold.plan.category_budgets;
    fr.category_selected = fold.plan.category_selected;
    fr.selected_ids = fold.plan.selected;
    accs.push_back(fr.accuracy);
    aucs.push_back(fr.auc);
    grids.push_back(roc_on_grid(fr.roc));
    res.folds.push_back(std::move(fr));
  }
  res.accuracy = mean_sd(accs);
  res.auc = mean_sd(aucs);
  res.mean_roc.assign(kRocGridPoints, 0.0);
  res.sd_roc.assign(kRocGridPoints, 0.0);
  for (std::size_t g = 0; g < kRocGridPoints; ++g) {
    std::vector<double> col;
    for (const auto& gr : grids) col.push_back(gr[g]);
    const auto ms = mean_sd(col);
    res.mean_roc[g] = ms.mean;
    res.sd_roc[g] = ms.sd;
  }
  if (cfg.compute_shap) {
    auto report = aggregate(std::span<const std::vector<double>>(phis), fm.metas);
    report.participant = data.subject_id;
    res.shap = std::move(report);
  }
  return res;
}

inline SubjectResult run_within_subject(const TrialSet& ts, const PipelineConfig& cfg, std::size_t jobs = 1) {
  return evaluate_subject(prepare_subject(ts, cfg, jobs), cfg, jobs);
}

// --- leave-one-subject-out -----------------------------------------------------

struct LosoEntry {
  std::string subject_id;
  double auc = 0.0;
  double accuracy = 0.0;
  std::size_t n_test = 0;
};

struct LosoResult {
  std::vector<LosoEntry> subjects;
  MeanSd auc;
  MeanSd accuracy;
};

inline LosoResult run_loso(std::span<const TrialSet> sets, const PipelineConfig& cfg, std::size_t jobs = 1) {
  if (sets.size() < 2) throw Error("leave-one-subject-out requires at least 2 subjects");
  std::vector<SubjectData> data(sets.size());
  parallel_for(sets.size(), jobs, [&](std::size_t s) { data[s] = prepare_subject(sets[s], cfg); });

  // Pool every subject's rows into one matrix.
  FeatureMatrix pooled;
  pooled.setting = cfg.setting;
  pooled.metas = data[0].features.metas;
  pooled.n_cols = pooled.metas.size();
  pooled.degenerate_counts.assign(pooled.n_cols, 0);
  std::vector<std::size_t> owner;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto& fm = data[s].features;
    pooled.values.insert(pooled.values.end(), fm.values.begin(), fm.values.end());
    pooled.labels.insert(pooled.labels.end(), fm.labels.begin(), fm.labels.end());
    owner.insert(owner.end(), fm.n_rows, s);
    pooled.n_rows += fm.n_rows;
  }

  LosoResult res;
  res.subjects.resize(sets.size());
  parallel_for(sets.size(), jobs, [&](std::size_t held) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < pooled.n_rows; ++i) (owner[i] == held ? test : train).push_back(i);
    const FoldModel fold = train_fold(pooled, train, cfg, derive_seed(cfg.seed, held, 0x1050));
    std::vector<double> scores;
    std::vector<Label> truth;
    for (auto i : test) {
      scores.push_back(predict_proba(fold.model, gather(pooled.row(i), fold.plan.selected))[1]);
      truth.push_back(pooled.labels[i]);
    }
    res.subjects[held] = {data[held].subject_id, auc(scores, truth), accuracy(scores, truth), test.size()};
  });
  std::vector<double> aucs, accs;
  for (const auto& e : res.subjects) {
    aucs.push_back(e.auc);
    accs.push_back(e.accuracy);
  }
  res.auc = mean_sd(aucs);
  res.accuracy = mean_sd(accs);
  return res;
}

// --- ROI-restricted importance ------------------------------------------------------

inline constexpr std::size_t kGridSettings = kNumBands + 1;  // five single bands, then multi-band

struct RoiGrid {
  // auc[roi][setting]; setting index kNumBands is multi-band.
  std::array<std::array<double, kGridSettings>, kNumRois> auc{};
  std::array<std::array<bool, kGridSettings>, kNumRois> empty{};
  std::array<std::array<std::size_t, kGridSettings>, kNumRois> n_features{};
};

// Intra-ROI features of `roi` in the band(s) of grid column `setting`.
inline std::vector<std::size_t> roi_restricted_columns(const FeatureMatrix& fm, std::size_t roi, std::size_t setting) {
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < fm.n_cols; ++j) {
    const auto& m = fm.metas[j];
    if (m.category != Category::IntraRoiSpatial && m.category != Category::IntraRoiTemporal) continue;
    if (std::find(m.rois.begin(), m.rois.end(), roi) == m.rois.end()) continue;
    if (setting < kNumBands && static_cast<std::size_t>(m.band) != setting) continue;
    cols.push_back(j);
  }
  return cols;
}

// Cross-validated AUC of forests restricted to one ROI's intra-ROI features, for
// each band and for all bands together. Restricted pools are below the selection
// budgets, so every restricted feature is used.
inline RoiGrid roi_band_importance(const TrialSet& ts, const PipelineConfig& cfg, std::size_t jobs = 1) {
  PipelineConfig all = cfg;
  all.setting = BandSetting::multi_band();
  const SubjectData data = prepare_subject(ts, all);
  const FeatureMatrix& fm = data.features;
  const std::uint64_t subject_seed = derive_seed(cfg.seed, string_seed(ts.subject_id));
  const CvSplit split = stratified_kfold(fm.labels, cfg.k, subject_seed);

  RoiGrid grid;
  parallel_for(kNumRois * kGridSettings, jobs, [&](std::size_t cell) {
    const std::size_t roi = cell / kGridSettings, setting = cell % kGridSettings;
    const auto cols = roi_restricted_columns(fm, roi, setting);
    grid.n_features[roi][setting] = cols.size();
    if (cols.empty()) {
      grid.auc[roi][setting] = 0.5;
      grid.empty[roi][setting] = true;
      return;
    }
    std::vector<double> aucs;
    for (std::size_t f = 0; f < split.folds.size(); ++f) {
      const auto train = split.train(f);
      const FeatureMatrix xt = fm.subset(train, cols);
      ForestConfig fc = cfg.forest;
      fc.seed = derive_seed(subject_seed, f, 0x6000 + cell);
      const ForestModel model = fit_forest({xt.values.data(), xt.n_rows, xt.n_cols}, xt.labels, fc);
      std::vector<double> scores;
      std::vector<Label> truth;
      for (auto i : split.folds[f]) {
        scores.push_back(predict_proba(model, gather(fm.row(i), cols))[1]);
        truth.push_back(fm.labels[i]);
      }
      aucs.push_back(auc(scores, truth));
    }
    grid.auc[roi][setting] = mean_sd(aucs).mean;
  });
  return grid;
}

// --- JSON ------------------------------------------------------------------------

inline nlohmann::json to_json(const MeanSd& m) { return {{"mean", m.mean}, {"sd", m.sd}}; }

inline nlohmann::json to_json(const SubjectResult& r) {
  nlohmann::json j;
  j["subject"] = r.subject_id;
  j["n_trials"] = r.n_trials;
  j["n_tcsi"] = r.n_tcsi;
  j["n_ei"] = r.n_trials - r.n_tcsi;
  j["accuracy"] = to_json(r.accuracy);
  j["auc"] = to_json(r.auc);
  auto& folds = j["folds"] = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json cats;
    for (std::size_t c = 0; c < kNumCategories; ++c)
      cats[category_name(static_cast<Category>(c))] = {{"budget", f.category_budgets[c]},
                                                       {"selected", f.category_selected[c]}};
    nlohmann::json roc = {{"fpr", f.roc.fpr}, {"tpr", f.roc.tpr}};
    folds.push_back({{"n_train", f.n_train}, {"n_test", f.n_test}, {"accuracy", f.accuracy}, {"auc", f.auc},
                     {"n_selected", f.n_selected}, {"categories", cats}, {"roc", roc}});
  }
  j["mean_roc"] = {{"tpr", r.mean_roc}, {"sd", r.sd_roc}};
  if (r.shap) {
    j["shap"] = to_json(*r.shap);
    j["shap"]["max_local_accuracy_error"] = r.max_local_accuracy_error;
    j["shap"]["n_explained"] = r.n_explained;
  }
  return j;
}

inline nlohmann::json to_json(const LosoResult& r) {
  nlohmann::json j;
  auto& s = j["subjects"] = nlohmann::json::array();
  for (const auto& e : r.subjects)
    s.push_back({{"subject", e.subject_id}, {"auc", e.auc}, {"accuracy", e.accuracy}, {"n_test", e.n_test}});
  j["auc"] = to_json(r.auc);
  j["accuracy"] = to_json(r.accuracy);
  return j;
}

inline std::string grid_setting_name(std::size_t setting) {
  return setting < kNumBands ? kBands[setting].name : "Multi";
}

inline nlohmann::json to_json(const RoiGrid& g) {
  const auto& rois = standard_montage().rois();
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t s = 0; s < kGridSettings; ++s) {
    nlohmann::json col = nlohmann::json::object();
    for (std::size_t r = 0; r < kNumRois; ++r)
      col[rois[r].name] = {{"auc", g.auc[r][s]}, {"n_features", g.n_features[r][s]}, {"empty", g.empty[r][s]}};
    j[grid_setting_name(s)] = col;
  }
  return j;
}

}  // namespace attnshift

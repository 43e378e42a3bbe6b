#pragma once

// End-to-end experiment runs writing a report bundle: report.json, Markdown
// tables, ROC data and SVG figures. Output bytes depend only on the config,
// the dataset and the seed, never on the worker count.

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/common.hpp"
#include "attnshift/config.hpp"
#include "attnshift/eval.hpp"
#include "attnshift/features.hpp"
#include "attnshift/forest.hpp"
#include "attnshift/report.hpp"
#include "attnshift/shap.hpp"
#include "attnshift/synthgen.hpp"

namespace attnshift {

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

struct Failure {
  std::string subject;
  std::string setting;
  std::string error;
};

struct RunOutcome {
  nlohmann::json report;
  std::vector<Failure> failures;
  std::vector<std::string> warnings;
  int exit_code() const { return failures.empty() ? 0 : 1; }
};

inline std::vector<TrialSet> load_or_generate(const ExperimentConfig& cfg, std::size_t jobs = 1) {
  if (cfg.source == "load") return read_dataset(cfg.dataset);
  return generate(cfg.generator(), jobs);
}

namespace detail {

inline nlohmann::json failures_json(const std::vector<Failure>& fs, const std::string& setting) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : fs)
    if (f.setting == setting) out.push_back({{"subject", f.subject}, {"error", f.error}});
  return out;
}

inline nlohmann::json share_rows_json(const std::vector<ShareRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back({{"label", r.label}, {"mean", r.mean}, {"sd", r.sd}});
  return out;
}

inline std::string file_safe(std::string s) {
  for (auto& c : s)
    if (c == ' ' || c == '/' || c == '\\') c = '_';
  return s;
}

// Runs `fn(i)` for each subject, recording failures instead of propagating them.
template <typename Fn>
void for_each_subject(const std::vector<TrialSet>& sets, std::size_t jobs, const std::string& setting,
                      std::vector<Failure>& failures, Fn fn) {
  std::vector<std::optional<std::string>> errors(sets.size());
  parallel_for(sets.size(), jobs, [&](std::size_t s) {
    try {
      fn(s);
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  });
  for (std::size_t s = 0; s < sets.size(); ++s)
    if (errors[s]) failures.push_back({sets[s].subject_id, setting, *errors[s]});
}

inline void write_attribution_outputs(const std::filesystem::path& out, const std::vector<AttributionReport>& reports,
                                      const ExperimentConfig& cfg, nlohmann::json& report_json) {
  for (const auto& r : reports) check_normalized(r);
  write_text(out / "tables" / "shap_band.md", band_table_md(reports));
  write_text(out / "tables" / "shap_feature_type.md", feature_type_table_md(reports, cfg.selection.fractions));
  write_text(out / "tables" / "shap_roi.md", roi_table_md(reports));
  std::array<double, kNumRois> roi_mean{};
  for (const auto& r : reports)
    for (std::size_t i = 0; i < kNumRois; ++i) roi_mean[i] += r.roi[i] / static_cast<double>(reports.size());
  const auto [lo, hi] = std::minmax_element(roi_mean.begin(), roi_mean.end());
  write_text(out / "figures" / "shap_roi_topomap.svg",
             render_topomap(topomap_spec(roi_mean, *lo, *hi, "Mean normalized |SHAP| per ROI", "")));
  report_json["band"] = share_rows_json(band_shares(reports));
  report_json["category"] = share_rows_json(category_shares(reports));
  report_json["subtype"] = share_rows_json(subtype_shares(reports));
  report_json["roi"] = share_rows_json(roi_shares(reports));
}

}  // namespace detail

inline RunOutcome run_within(const ExperimentConfig& cfg, const std::vector<TrialSet>& sets,
                             const std::filesystem::path& out, std::size_t jobs, std::ostream* log) {
  RunOutcome outcome;
  nlohmann::json results = nlohmann::json::array();
  std::vector<SettingSummary> summaries;
  for (std::size_t si = 0; si < cfg.settings.size(); ++si) {
    const BandSetting setting = cfg.settings[si];
    const std::string name = setting.to_string();
    const bool primary = si == 0;
    PipelineConfig pc = cfg.pipeline(setting);
    pc.compute_shap = cfg.shap && primary;
    if (log) *log << "within-subject, setting " << name << ", " << sets.size() << " participants\n";

    std::vector<std::optional<SubjectResult>> res(sets.size());
    std::vector<std::optional<FeatureMatrix>> kept(sets.size());
    std::vector<std::vector<ForestModel>> models(sets.size());
    detail::for_each_subject(sets, jobs, name, outcome.failures, [&](std::size_t s) {
      SubjectData data = prepare_subject(sets[s], pc);
      res[s] = evaluate_subject(data, pc, 1, pc.compute_shap, primary && cfg.save_models ? &models[s] : nullptr);
      if (primary) kept[s] = std::move(data.features);
    });

    std::vector<SubjectResult> ok;
    for (auto& r : res)
      if (r) ok.push_back(*r);
    const auto summary = summarize(name, ok);
    summaries.push_back(summary);

    nlohmann::json entry;
    entry["setting"] = name;
    entry["summary"] = {{"accuracy", to_json(summary.accuracy)},
                        {"auc", to_json(summary.auc)},
                        {"n_participants", summary.n_participants}};
    auto& subj = entry["subjects"] = nlohmann::json::array();
    for (const auto& r : ok) subj.push_back(to_json(r));
    entry["failures"] = detail::failures_json(outcome.failures, name);
    results.push_back(entry);

    write_text(out / "tables" / ("subjects_" + name + ".md"), subject_table_md(ok));
    for (const auto& r : ok)
      write_text(out / "roc" / (name + "_" + detail::file_safe(r.subject_id) + ".csv"), roc_csv(r.mean_roc, r.sd_roc));

    if (primary && pc.compute_shap && !ok.empty()) {
      std::vector<AttributionReport> reports;
      double max_err = 0.0;
      for (std::size_t s = 0; s < sets.size(); ++s) {
        if (!res[s]) continue;
        const auto& r = *res[s];
        reports.push_back(*r.shap);
        max_err = std::max(max_err, r.max_local_accuracy_error);
        std::vector<std::vector<double>> phis, values;
        for (std::size_t t = 0; t < r.attributions.size(); ++t) {
          phis.push_back(r.attributions[t].phi);
          const auto row = kept[s]->row(r.attribution_rows[t]);
          values.emplace_back(row.begin(), row.end());
        }
        const auto summary_plot = render_shap_summary(phis, kept[s]->metas, cfg.shap_top_k, values,
                                                      "SHAP summary, participant " + r.subject_id + ", " + name);
        if (summary_plot.warning) outcome.warnings.push_back(*summary_plot.warning);
        write_text(out / "figures" / ("shap_summary_" + detail::file_safe(r.subject_id) + ".svg"), summary_plot.svg);
      }
      nlohmann::json shap;
      shap["setting"] = name;
      shap["max_local_accuracy_error"] = max_err;
      detail::write_attribution_outputs(out, reports, cfg, shap);
      outcome.report["shap"] = shap;
    }
    if (primary && cfg.save_models) {
      for (std::size_t s = 0; s < sets.size(); ++s) {
        if (!res[s]) continue;
        const std::string id = detail::file_safe(sets[s].subject_id);
        write_feature_matrix((out / "features" / id).string(), *kept[s]);
        for (std::size_t f = 0; f < models[s].size(); ++f)
          write_text(out / "models" / (id + "_fold" + std::to_string(f) + ".json"), to_json(models[s][f]).dump(1) + "\n");
      }
    }
  }
  write_text(out / "tables" / "metrics.md", metrics_table_md(summaries));
  outcome.report["results"] = results;
  return outcome;
}

inline RunOutcome run_loso_scheme(const ExperimentConfig& cfg, const std::vector<TrialSet>& sets,
                                  const std::filesystem::path& out, std::size_t jobs, std::ostream* log) {
  RunOutcome outcome;
  nlohmann::json results = nlohmann::json::array();
  for (const auto& setting : cfg.settings) {
    const std::string name = setting.to_string();
    if (log) *log << "leave-one-subject-out, setting " << name << "\n";
    PipelineConfig pc = cfg.pipeline(setting);
    pc.compute_shap = false;
    try {
      const LosoResult r = run_loso(sets, pc, jobs);
      nlohmann::json entry = to_json(r);
      entry["setting"] = name;
      results.push_back(entry);
      write_text(out / "tables" / ("loso_" + name + ".md"), loso_table_md(r));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      outcome.failures.push_back({"*", name, e.what()});
      results.push_back({{"setting", name}, {"failures", detail::failures_json(outcome.failures, name)}});
    }
  }
  outcome.report["results"] = results;
  return outcome;
}

inline RunOutcome run_roi_grid(const ExperimentConfig& cfg, const std::vector<TrialSet>& sets,
                               const std::filesystem::path& out, std::size_t jobs, std::ostream* log) {
  RunOutcome outcome;
  if (log) *log << "ROI x band importance grid, " << sets.size() << " participants\n";
  const PipelineConfig pc = cfg.pipeline(BandSetting::multi_band());
  std::vector<std::optional<RoiGrid>> grids(sets.size());
  detail::for_each_subject(sets, jobs, "roi-grid", outcome.failures,
                           [&](std::size_t s) { grids[s] = roi_band_importance(sets[s], pc); });

  RoiGrid mean;
  std::size_t n = 0;
  nlohmann::json subjects = nlohmann::json::array();
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (!grids[s]) continue;
    ++n;
    subjects.push_back({{"subject", sets[s].subject_id}, {"grid", to_json(*grids[s])}});
    for (std::size_t r = 0; r < kNumRois; ++r)
      for (std::size_t c = 0; c < kGridSettings; ++c) {
        mean.auc[r][c] += grids[s]->auc[r][c];
        mean.n_features[r][c] = grids[s]->n_features[r][c];
        mean.empty[r][c] = grids[s]->empty[r][c];
      }
  }
  if (n > 0) {
    double lo = 1.0, hi = 0.0;
    for (auto& row : mean.auc)
      for (auto& v : row) {
        v /= static_cast<double>(n);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    std::string table = "| Region |";
    std::string rule = "|---|";
    for (std::size_t c = 0; c < kGridSettings; ++c) {
      table += " " + grid_setting_name(c) + " |";
      rule += "---:|";
    }
    table += "\n" + rule + "\n";
    for (std::size_t r = 0; r < kNumRois; ++r) {
      table += "| " + standard_montage().rois()[r].name + " |";
      for (std::size_t c = 0; c < kGridSettings; ++c) table += " " + fixed(mean.auc[r][c]) + " |";
      table += "\n";
    }
    write_text(out / "tables" / "roi_grid.md", table);
    for (std::size_t c = 0; c < kGridSettings; ++c) {
      std::array<double, kNumRois> col{};
      for (std::size_t r = 0; r < kNumRois; ++r) col[r] = mean.auc[r][c];
      write_text(out / "figures" / ("topomap_" + grid_setting_name(c) + ".svg"),
                 render_topomap(topomap_spec(col, lo, hi, "ROI-restricted AUC", grid_setting_name(c))));
    }
  }
  outcome.report["roi_grid"] = {{"subjects", subjects},
                                {"mean", to_json(mean)},
                                {"n_participants", n},
                                {"failures", detail::failures_json(outcome.failures, "roi-grid")}};
  return outcome;
}

inline RunOutcome run_experiment(const ExperimentConfig& cfg, const std::vector<TrialSet>& sets,
                                 const std::filesystem::path& out, std::size_t jobs = 1, std::ostream* log = nullptr) {
  validate(cfg);
  RunOutcome outcome;
  switch (cfg.scheme) {
    case Scheme::Within: outcome = run_within(cfg, sets, out, jobs, log); break;
    case Scheme::Loso: outcome = run_loso_scheme(cfg, sets, out, jobs, log); break;
    case Scheme::RoiGrid: outcome = run_roi_grid(cfg, sets, out, jobs, log); break;
  }
  nlohmann::json report;
  report["format"] = "attnshift-report";
  report["version"] = 1;
  report["config"] = to_json(cfg);
  auto& ds = report["dataset"] = nlohmann::json::array();
  for (const auto& ts : sets) {
    std::size_t n_tcsi = 0;
    for (const auto& t : ts.trials) n_tcsi += t.label == Label::TCSI;
    ds.push_back({{"subject", ts.subject_id}, {"n_trials", ts.trials.size()}, {"n_tcsi", n_tcsi}});
  }
  report["scheme"] = scheme_name(cfg.scheme);
  for (auto& [k, v] : outcome.report.items()) report[k] = v;
  report["n_failures"] = outcome.failures.size();
  outcome.report = report;
  write_text(out / "report.json", report.dump(2) + "\n");
  return outcome;
}

// Attributions of a saved fold model over every row of a saved feature matrix.
struct ExplainOutcome {
  AttributionReport report;
  std::vector<std::string> warnings;
  double max_local_accuracy_error = 0.0;
};

inline ExplainOutcome run_explain(const std::filesystem::path& model_path, const std::string& features_stem,
                                  const std::filesystem::path& out, std::size_t top_k = 20,
                                  const std::array<double, kNumCategories>& fractions = SelectionConfig{}.fractions) {
  const ForestModel model = forest_from_json(read_json(model_path));
  const FeatureMatrix fm = read_feature_matrix(features_stem);
  std::vector<std::size_t> cols = model.feature_map;
  if (cols.empty()) {
    if (fm.n_cols != model.n_features)
      throw DimensionError("model expects " + std::to_string(model.n_features) + " features, matrix has " +
                           std::to_string(fm.n_cols));
    cols.resize(fm.n_cols);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
  }
  for (auto c : cols)
    if (c >= fm.n_cols)
      throw DimensionError("model references feature column " + std::to_string(c) + " but the matrix has " +
                           std::to_string(fm.n_cols) + " columns");

  ExplainOutcome res;
  std::vector<std::vector<double>> phis, values;
  for (std::size_t i = 0; i < fm.n_rows; ++i) {
    const auto x = gather(fm.row(i), cols);
    const Attribution a = tree_shap(model, x);
    double total = a.base;
    for (double v : a.phi) total += v;
    res.max_local_accuracy_error = std::max(res.max_local_accuracy_error, std::abs(total - a.output));
    std::vector<double> full(fm.n_cols, 0.0);
    for (std::size_t j = 0; j < cols.size(); ++j) full[cols[j]] = a.phi[j];
    phis.push_back(std::move(full));
    const auto row = fm.row(i);
    values.emplace_back(row.begin(), row.end());
  }
  res.report = aggregate(std::span<const std::vector<double>>(phis), fm.metas);
  res.report.participant = model_path.stem().string();
  check_normalized(res.report);

  const std::vector<AttributionReport> reports{res.report};
  write_text(out / "shap_band.md", band_table_md(reports));
  write_text(out / "shap_feature_type.md", feature_type_table_md(reports, fractions));
  write_text(out / "shap_roi.md", roi_table_md(reports));
  const auto plot = render_shap_summary(phis, fm.metas, top_k, values, "SHAP summary, " + res.report.participant);
  if (plot.warning) res.warnings.push_back(*plot.warning);
  write_text(out / "shap_summary.svg", plot.svg);
  const auto [lo, hi] = std::minmax_element(res.report.roi.begin(), res.report.roi.end());
  write_text(out / "shap_roi_topomap.svg",
             render_topomap(topomap_spec(res.report.roi, *lo, *hi, "Normalized |SHAP| per ROI", "")));
  nlohmann::json j = to_json(res.report);
  j["max_local_accuracy_error"] = res.max_local_accuracy_error;
  j["n_rows"] = fm.n_rows;
  write_text(out / "explain.json", j.dump(2) + "\n");
  return res;
}

}  // namespace attnshift

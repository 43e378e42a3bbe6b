// attnshift: generate synthetic datasets, run experiments, explain saved
// models and render topographies.
//
// Exit codes: 0 success, 1 partial failure, 2 usage or config error,
// 3 I/O or format error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "attnshift.hpp"

namespace {

using namespace attnshift;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct Flags {
  std::string config;
  std::string in;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string band;
  std::string scheme;
  std::size_t jobs = 1;
  std::string model;
  std::string features;
  std::size_t top_k = 20;
};

// Seed precedence: --seed, then ATTNSHIFT_SEED, then the config file.
ExperimentConfig resolve_config(const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? parse_config("") : load_config(f.config);
  if (const char* env = std::getenv("ATTNSHIFT_SEED"); env != nullptr && *env != '\0') {
    try {
      set_config_value(cfg, "seed", env);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("ATTNSHIFT_SEED: ") + e.what());
    }
  }
  if (f.seed) cfg.seed = *f.seed;
  if (!f.band.empty()) set_config_value(cfg, "band", f.band);
  if (!f.scheme.empty()) set_config_value(cfg, "scheme", f.scheme);
  if (!f.out.empty()) cfg.out = f.out;
  validate(cfg);
  return cfg;
}

int cmd_generate(const Flags& f) {
  const ExperimentConfig cfg = resolve_config(f);
  const GenConfig gen = cfg.generator();
  const auto sets = generate(gen, f.jobs);
  write_dataset(cfg.out, sets, to_json(gen));
  std::cerr << "wrote " << sets.size() << " subjects to " << cfg.out << "\n";
  return kExitOk;
}

int cmd_run(const Flags& f) {
  ExperimentConfig cfg = resolve_config(f);
  if (!f.in.empty()) {
    cfg.source = "load";
    cfg.dataset = f.in;
  }
  const auto sets = load_or_generate(cfg, f.jobs);
  const RunOutcome outcome = run_experiment(cfg, sets, cfg.out, f.jobs, &std::cerr);
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& fail : outcome.failures)
    std::cerr << "failed: subject " << fail.subject << " (" << fail.setting << "): " << fail.error << "\n";
  std::cerr << "report written to " << (std::filesystem::path(cfg.out) / "report.json").string() << "\n";
  return outcome.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_explain(const Flags& f) {
  if (f.model.empty() || f.features.empty() || f.out.empty())
    throw ConfigError("explain requires --model, --features and --out");
  if (f.top_k < 1) throw ConfigError("--top-k must be >= 1");
  const ExplainOutcome res = run_explain(f.model, f.features, f.out, f.top_k);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "explained " << res.report.participant << ", max local-accuracy error "
            << res.max_local_accuracy_error << "\n";
  return kExitOk;
}

// --in is either a topomap spec ({"values": {roi: v}, ...}) or a report.json
// from a roi-grid run, in which case --band picks the column.
int cmd_topomap(const Flags& f) {
  if (f.in.empty() || f.out.empty()) throw ConfigError("topomap requires --in and --out");
  const nlohmann::json j = read_json(f.in);
  TopomapSpec spec;
  try {
    if (j.contains("values")) {
      for (const auto& [k, v] : j.at("values").items()) spec.values[k] = v.get<double>();
      spec.vmin = j.value("vmin", 0.0);
      spec.vmax = j.value("vmax", 1.0);
      spec.colormap = j.value("colormap", std::string("viridis"));
      spec.title = j.value("title", std::string());
      spec.band = j.value("band", std::string());
      for (const auto& roi : standard_montage().rois())
        if (!spec.values.contains(roi.name)) throw FormatError(f.in + ": no value for ROI '" + roi.name + "'");
    } else if (j.contains("roi_grid")) {
      std::string column = "Multi";
      if (!f.band.empty() && f.band != "multi") column = band_name(parse_band(f.band));
      double lo = 1.0, hi = 0.0;
      for (const auto& [roi, cell] : j.at("roi_grid").at("mean").at(column).items()) {
        const double v = cell.at("auc").get<double>();
        spec.values[roi] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      spec.vmin = lo;
      spec.vmax = std::max(lo, hi);
      spec.title = "ROI-restricted AUC";
      spec.band = column;
    } else {
      throw FormatError(f.in + ": expected a 'values' object or a roi-grid report");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(f.in + ": " + e.what());
  }
  write_text(f.out, render_topomap(spec));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-shift EEG decoding experiments on synthetic or stored trial sets"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "experiment config file (key = value)");
    sub->add_option("--seed", f.seed, "global seed; overrides ATTNSHIFT_SEED and the config");
    sub->add_option("--jobs", f.jobs, "worker threads; output does not depend on it")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset directory");
  add_common(gen);
  gen->add_option("--out", f.out, "dataset directory")->required();

  auto* run = app.add_subcommand("run", "run the configured evaluation scheme");
  add_common(run);
  run->add_option("--in", f.in, "dataset directory (default: generate from the config)");
  run->add_option("--out", f.out, "report directory");
  run->add_option("--band", f.band, "multi, theta, alpha, lowbeta, highbeta, gamma, a comma list, or all");
  run->add_option("--scheme", f.scheme, "within, loso or roi-grid")
      ->check(CLI::IsMember({"within", "loso", "roi-grid"}));

  auto* explain = app.add_subcommand("explain", "SHAP tables and summary plot for a saved fold model");
  explain->add_option("--model", f.model, "model JSON written with save_models = true")->required();
  explain->add_option("--features", f.features, "feature matrix stem (without .json/.f32)")->required();
  explain->add_option("--out", f.out, "output directory")->required();
  explain->add_option("--top-k", f.top_k, "rows in the summary plot");

  auto* topo = app.add_subcommand("topomap", "render an ROI topography SVG");
  topo->add_option("--in", f.in, "topomap spec JSON or roi-grid report.json")->required();
  topo->add_option("--out", f.out, "SVG path")->required();
  topo->add_option("--band", f.band, "grid column when --in is a report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(f);
    if (run->parsed()) return cmd_run(f);
    if (explain->parsed()) return cmd_explain(f);
    if (topo->parsed()) return cmd_topomap(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnknownLabelError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}

#pragma once

// Experiment configuration: a `key = value` text file with `#` comments.
// Every key is optional; an empty file yields the default experiment.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/common.hpp"
#include "attnshift/eval.hpp"
#include "attnshift/features.hpp"
#include "attnshift/forest.hpp"
#include "attnshift/montage.hpp"
#include "attnshift/selection.hpp"
#include "attnshift/synthgen.hpp"

namespace attnshift {

enum class Scheme { Within, Loso, RoiGrid };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Within: return "within";
    case Scheme::Loso: return "loso";
    case Scheme::RoiGrid: return "roi-grid";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "within") return Scheme::Within;
  if (s == "loso") return Scheme::Loso;
  if (s == "roi-grid") return Scheme::RoiGrid;
  throw ConfigError("scheme must be one of within, loso, roi-grid (got '" + s + "')");
}

struct ExperimentConfig {
  // "generate" synthesizes `gen`; "load" reads `dataset`.
  std::string source = "generate";
  std::string dataset;
  GenConfig gen;
  // First entry drives attribution tables and figures.
  std::vector<BandSetting> settings{BandSetting::multi_band()};
  SelectionConfig selection;
  ForestConfig forest;
  Scheme scheme = Scheme::Within;
  std::size_t folds = 3;
  bool permute_labels = false;
  bool shap = true;
  std::size_t shap_top_k = 20;
  bool save_models = false;
  std::string out = "attnshift-out";
  std::uint64_t seed = 1;

  PipelineConfig pipeline(const BandSetting& setting) const {
    PipelineConfig p;
    p.setting = setting;
    p.selection = selection;
    p.forest = forest;
    p.k = folds;
    p.seed = seed;
    p.permute_labels = permute_labels;
    p.compute_shap = shap;
    return p;
  }

  GenConfig generator() const {
    GenConfig g = gen;
    g.seed = seed;
    return g;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end || v.empty())
    throw ConfigError("invalid value for '" + key + "': '" + v + "' is not a number");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("invalid value for '" + key + "': '" + v + "' is not a boolean");
}

inline std::vector<BandSetting> parse_settings(const std::string& key, const std::string& v) {
  if (v == "all") {
    std::vector<BandSetting> out{BandSetting::multi_band()};
    for (const auto& b : kBands) out.push_back(BandSetting::single(b.band));
    return out;
  }
  std::vector<BandSetting> out;
  for (const auto& item : split_list(v)) {
    try {
      out.push_back(BandSetting::parse(item));
    } catch (const Error&) {
      throw ConfigError("invalid value for '" + key + "': unknown band setting '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("invalid value for '" + key + "': empty list");
  return out;
}

// "left frontal:gamma:+" entries separated by commas.
inline std::vector<SignatureEntry> parse_planted(const std::string& key, const std::string& v) {
  std::vector<SignatureEntry> out;
  if (v.empty() || v == "none") return out;
  for (const auto& item : split_list(v)) {
    const auto a = item.find(':'), b = item.rfind(':');
    if (a == std::string::npos || a == b) throw ConfigError("invalid value for '" + key + "': expected roi:band:sign");
    SignatureEntry e;
    try {
      e.roi = standard_montage().roi(trim(item.substr(0, a))).index;
      e.band = parse_band(trim(item.substr(a + 1, b - a - 1)));
    } catch (const Error& err) {
      throw ConfigError("invalid value for '" + key + "': " + err.what());
    }
    const std::string sign = trim(item.substr(b + 1));
    if (sign == "+" || sign == "+1") e.sign = 1;
    else if (sign == "-" || sign == "-1") e.sign = -1;
    else throw ConfigError("invalid value for '" + key + "': sign must be + or -");
    out.push_back(e);
  }
  return out;
}

inline std::string planted_text(const std::vector<SignatureEntry>& planted) {
  if (planted.empty()) return "none";
  std::string s;
  for (const auto& p : planted) {
    if (!s.empty()) s += ", ";
    std::string band = band_name(p.band);
    std::transform(band.begin(), band.end(), band.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    s += standard_montage().rois()[p.roi].name + ":" + band + ":" + (p.sign > 0 ? "+" : "-");
  }
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

inline const std::map<std::string, Setter>& setters() {
  using C = ExperimentConfig;
  using S = std::string;
  static const std::map<std::string, Setter> table = {
      {"source",
       [](C& c, const S& k, const S& v) {
         if (v != "generate" && v != "load") throw ConfigError("invalid value for '" + k + "': use generate or load");
         c.source = v;
       }},
      {"dataset", [](C& c, const S&, const S& v) { c.dataset = v; }},
      {"seed", [](C& c, const S& k, const S& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"out", [](C& c, const S&, const S& v) { c.out = v; }},
      {"band", [](C& c, const S& k, const S& v) { c.settings = parse_settings(k, v); }},
      {"scheme",
       [](C& c, const S& k, const S& v) {
         try {
           c.scheme = parse_scheme(v);
         } catch (const ConfigError& e) {
           throw ConfigError("invalid value for '" + k + "': " + e.what());
         }
       }},
      {"folds", [](C& c, const S& k, const S& v) { c.folds = parse_number<std::size_t>(k, v); }},
      {"permute_labels", [](C& c, const S& k, const S& v) { c.permute_labels = parse_bool(k, v); }},
      {"shap", [](C& c, const S& k, const S& v) { c.shap = parse_bool(k, v); }},
      {"shap.top_k", [](C& c, const S& k, const S& v) { c.shap_top_k = parse_number<std::size_t>(k, v); }},
      {"save_models", [](C& c, const S& k, const S& v) { c.save_models = parse_bool(k, v); }},
      {"gen.n_subjects", [](C& c, const S& k, const S& v) { c.gen.n_subjects = parse_number<std::size_t>(k, v); }},
      {"gen.trials_min", [](C& c, const S& k, const S& v) { c.gen.trials_min = parse_number<std::size_t>(k, v); }},
      {"gen.trials_max", [](C& c, const S& k, const S& v) { c.gen.trials_max = parse_number<std::size_t>(k, v); }},
      {"gen.class_balance", [](C& c, const S& k, const S& v) { c.gen.class_balance = parse_number<double>(k, v); }},
      {"gen.fs", [](C& c, const S& k, const S& v) { c.gen.fs = parse_number<double>(k, v); }},
      {"gen.duration_s", [](C& c, const S& k, const S& v) { c.gen.duration_s = parse_number<double>(k, v); }},
      {"gen.separability", [](C& c, const S& k, const S& v) { c.gen.separability = parse_number<double>(k, v); }},
      {"gen.signature_size",
       [](C& c, const S& k, const S& v) { c.gen.signature_size = parse_number<std::size_t>(k, v); }},
      {"gen.shared_signature", [](C& c, const S& k, const S& v) { c.gen.shared_signature = parse_bool(k, v); }},
      {"gen.planted", [](C& c, const S& k, const S& v) { c.gen.planted = parse_planted(k, v); }},
      {"gen.artifact_noise", [](C& c, const S& k, const S& v) { c.gen.artifact_noise = parse_number<double>(k, v); }},
      {"selection.budget",
       [](C& c, const S& k, const S& v) { c.selection.total_budget = parse_number<std::size_t>(k, v); }},
      {"selection.fractions",
       [](C& c, const S& k, const S& v) {
         const auto items = split_list(v);
         if (items.size() != kNumCategories)
           throw ConfigError("invalid value for '" + k + "': expected 4 comma-separated fractions");
         for (std::size_t i = 0; i < kNumCategories; ++i) c.selection.fractions[i] = parse_number<double>(k, items[i]);
       }},
      {"forest.n_trees", [](C& c, const S& k, const S& v) { c.forest.n_trees = parse_number<std::size_t>(k, v); }},
      {"forest.max_depth", [](C& c, const S& k, const S& v) { c.forest.max_depth = parse_number<std::size_t>(k, v); }},
      {"forest.min_samples_split",
       [](C& c, const S& k, const S& v) { c.forest.min_samples_split = parse_number<std::size_t>(k, v); }},
      {"forest.balanced", [](C& c, const S& k, const S& v) { c.forest.balanced = parse_bool(k, v); }},
      {"forest.features_per_split",
       [](C& c, const S& k, const S& v) { c.forest.features_per_split = parse_number<std::size_t>(k, v); }},
      {"forest.bootstrap", [](C& c, const S& k, const S& v) { c.forest.bootstrap = parse_bool(k, v); }},
  };
  return table;
}

}  // namespace detail

inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = detail::setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

// Cross-field checks; messages name the offending key.
inline void validate(const ExperimentConfig& c) {
  if (c.source == "load" && c.dataset.empty()) throw ConfigError("'dataset' is required when source = load");
  if (c.folds < 2) throw ConfigError("invalid value for 'folds': must be >= 2");
  if (c.shap_top_k < 1) throw ConfigError("invalid value for 'shap.top_k': must be >= 1");
  if (c.forest.n_trees < 1) throw ConfigError("invalid value for 'forest.n_trees': must be >= 1");
  if (c.forest.max_depth < 1) throw ConfigError("invalid value for 'forest.max_depth': must be >= 1");
  if (c.forest.min_samples_split < 2) throw ConfigError("invalid value for 'forest.min_samples_split': must be >= 2");
  double fsum = 0.0;
  for (double f : c.selection.fractions) {
    if (!(f >= 0.0)) throw ConfigError("invalid value for 'selection.fractions': fractions must be >= 0");
    fsum += f;
  }
  if (std::abs(fsum - 1.0) > 1e-9) throw ConfigError("invalid value for 'selection.fractions': must sum to 1");
  try {
    c.gen.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid generator setting: gen.") + e.what());
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    try {
      set_config_value(cfg, key, detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string settings_text(const std::vector<BandSetting>& settings) {
  std::string s;
  for (const auto& b : settings) s += (s.empty() ? "" : ",") + b.to_string();
  return s;
}

// Canonical text form; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const ExperimentConfig& c) {
  auto num = [](double v) { return nlohmann::json(v).dump(); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::string f;
  for (std::size_t i = 0; i < kNumCategories; ++i) f += (i ? "," : "") + num(c.selection.fractions[i]);
  std::string s;
  s += "source = " + c.source + "\n";
  if (!c.dataset.empty()) s += "dataset = " + c.dataset + "\n";
  s += "seed = " + std::to_string(c.seed) + "\n";
  s += "out = " + c.out + "\n";
  s += "band = " + settings_text(c.settings) + "\n";
  s += "scheme = " + std::string(scheme_name(c.scheme)) + "\n";
  s += "folds = " + std::to_string(c.folds) + "\n";
  s += "permute_labels = " + b(c.permute_labels) + "\n";
  s += "shap = " + b(c.shap) + "\n";
  s += "shap.top_k = " + std::to_string(c.shap_top_k) + "\n";
  s += "save_models = " + b(c.save_models) + "\n";
  s += "gen.n_subjects = " + std::to_string(c.gen.n_subjects) + "\n";
  s += "gen.trials_min = " + std::to_string(c.gen.trials_min) + "\n";
  s += "gen.trials_max = " + std::to_string(c.gen.trials_max) + "\n";
  s += "gen.class_balance = " + num(c.gen.class_balance) + "\n";
  s += "gen.fs = " + num(c.gen.fs) + "\n";
  s += "gen.duration_s = " + num(c.gen.duration_s) + "\n";
  s += "gen.separability = " + num(c.gen.separability) + "\n";
  s += "gen.signature_size = " + std::to_string(c.gen.signature_size) + "\n";
  s += "gen.shared_signature = " + b(c.gen.shared_signature) + "\n";
  s += "gen.planted = " + detail::planted_text(c.gen.planted) + "\n";
  s += "gen.artifact_noise = " + num(c.gen.artifact_noise) + "\n";
  s += "selection.budget = " + std::to_string(c.selection.total_budget) + "\n";
  s += "selection.fractions = " + f + "\n";
  s += "forest.n_trees = " + std::to_string(c.forest.n_trees) + "\n";
  s += "forest.max_depth = " + std::to_string(c.forest.max_depth) + "\n";
  s += "forest.min_samples_split = " + std::to_string(c.forest.min_samples_split) + "\n";
  s += "forest.balanced = " + b(c.forest.balanced) + "\n";
  s += "forest.features_per_split = " + std::to_string(c.forest.features_per_split) + "\n";
  s += "forest.bootstrap = " + b(c.forest.bootstrap) + "\n";
  return s;
}

// Resolved configuration with every default filled in.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["source"] = c.source;
  j["dataset"] = c.dataset;
  j["seed"] = c.seed;
  auto& bands = j["band"] = nlohmann::json::array();
  for (const auto& s : c.settings) bands.push_back(s.to_string());
  j["scheme"] = scheme_name(c.scheme);
  j["folds"] = c.folds;
  j["permute_labels"] = c.permute_labels;
  j["shap"] = {{"enabled", c.shap}, {"top_k", c.shap_top_k}};
  j["save_models"] = c.save_models;
  j["gen"] = to_json(c.generator());
  j["selection"] = {{"budget", c.selection.total_budget}, {"fractions", c.selection.fractions}};
  j["forest"] = {{"n_trees", c.forest.n_trees},
                 {"max_depth", c.forest.max_depth},
                 {"min_samples_split", c.forest.min_samples_split},
                 {"balanced", c.forest.balanced},
                 {"features_per_split", c.forest.features_per_split},
                 {"bootstrap", c.forest.bootstrap}};
  return j;
}

}  // namespace attnshift

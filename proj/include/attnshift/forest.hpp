#pragma once

// Random forest of Gini-split CART trees with balanced class weights. Nodes keep
// weighted cover counts so the model can be explained with TreeSHAP.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/common.hpp"

namespace attnshift {

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 10;
  std::size_t min_samples_split = 10;
  bool balanced = true;
  // 0 = ceil(sqrt(d)).
  std::size_t features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  std::size_t split_features(std::size_t d) const {
    if (features_per_split != 0) return std::min(features_per_split, d);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));
  }

  void validate() const {
    if (n_trees == 0 || max_depth == 0 || min_samples_split == 0)
      throw ConfigError("forest n_trees, max_depth and min_samples_split must be positive");
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double cover = 0.0;              // weighted sample count
  std::array<double, 2> prob{};    // (EI, TCSI) at leaves

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Flattened tree; node 0 is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  std::size_t leaf_index(std::span<const double> x) const {
    std::size_t n = 0;
    while (!nodes[n].is_leaf())
      n = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[n].feature)] <= nodes[n].threshold ? nodes[n].left
                                                                                                      : nodes[n].right);
    return n;
  }
  const std::array<double, 2>& predict(std::span<const double> x) const { return nodes[leaf_index(x)].prob; }

  std::size_t depth(std::size_t n = 0) const {
    if (nodes[n].is_leaf()) return 0;
    return 1 + std::max(depth(static_cast<std::size_t>(nodes[n].left)), depth(static_cast<std::size_t>(nodes[n].right)));
  }
  bool operator==(const Tree&) const = default;
};

struct ForestModel {
  std::vector<Tree> trees;
  ForestConfig config;
  std::size_t n_features = 0;
  std::array<double, 2> class_weights{1.0, 1.0};
  // Original column ids of the model's inputs, when trained on a column subset.
  std::vector<std::size_t> feature_map;

  bool operator==(const ForestModel& o) const {
    return trees == o.trees && n_features == o.n_features && class_weights == o.class_weights &&
           feature_map == o.feature_map;
  }
};

// Row-major dense view.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {data + i * cols, cols}; }
};

// w_c = n / (2 n_c).
inline std::array<double, 2> balanced_class_weights(std::span<const Label> y) {
  std::array<std::size_t, 2> n{0, 0};
  for (auto l : y) ++n[label_index(l)];
  if (n[0] == 0 || n[1] == 0) throw Error("forest fit requires both classes in the training labels");
  const double total = static_cast<double>(y.size());
  return {total / (2.0 * static_cast<double>(n[0])), total / (2.0 * static_cast<double>(n[1]))};
}

struct OobEstimate {
  std::vector<double> tcsi_prob_sum;
  std::vector<std::size_t> votes;

  // Mean out-of-bag P(TCSI); NaN where a row was in every bootstrap.
  std::vector<double> tcsi_prob() const {
    std::vector<double> p(votes.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = votes[i] ? tcsi_prob_sum[i] / static_cast<double>(votes[i]) : std::nan("");
    return p;
  }
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const MatrixView& x, std::span<const Label> y, const ForestConfig& cfg,
              const std::array<double, 2>& class_w, std::uint64_t seed)
      : x_(x), y_(y), cfg_(cfg), class_w_(class_w), rng_(seed), features_(x.cols) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    k_ = cfg.split_features(x.cols);
  }

  Tree build(std::vector<std::uint32_t>& counts) {
    counts.assign(x_.rows, 0);
    if (cfg_.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, x_.rows - 1);
      for (std::size_t i = 0; i < x_.rows; ++i) ++counts[pick(rng_)];
    } else {
      std::fill(counts.begin(), counts.end(), 1U);
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x_.rows; ++i)
      if (counts[i]) idx.push_back(i);
    counts_ = &counts;
    tree_.nodes.clear();
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  double weight(std::size_t i) const { return (*counts_)[i] * class_w_[label_index(y_[i])]; }

  int grow(const std::vector<std::size_t>& idx, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::array<double, 2> w{0.0, 0.0};
    std::size_t raw = 0;
    for (auto i : idx) {
      w[label_index(y_[i])] += weight(i);
      raw += (*counts_)[i];
    }
    auto make_leaf = [&] {
      auto& node = tree_.nodes[static_cast<std::size_t>(id)];
      node.cover = w[0] + w[1];
      node.prob = {w[0] / node.cover, w[1] / node.cover};
      return id;
    };
    if (depth >= cfg_.max_depth || raw < cfg_.min_samples_split || w[0] == 0.0 || w[1] == 0.0) return make_leaf();

    // Sample k candidate features without replacement, scan them in ascending id.
    for (std::size_t i = 0; i < k_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, features_.size() - 1);
      std::swap(features_[i], features_[pick(rng_)]);
    }
    std::vector<std::size_t> cand(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(k_));
    std::sort(cand.begin(), cand.end());

    const double total = w[0] + w[1];
    double best_score = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, std::size_t>> order(idx.size());
    for (auto f : cand) {
      for (std::size_t q = 0; q < idx.size(); ++q) order[q] = {x_.at(idx[q], f), idx[q]};
      std::sort(order.begin(), order.end());
      std::array<double, 2> left{0.0, 0.0};
      for (std::size_t q = 0; q + 1 < order.size(); ++q) {
        left[label_index(y_[order[q].second])] += weight(order[q].second);
        if (!(order[q].first < order[q + 1].first)) continue;
        const double wl = left[0] + left[1];
        const double r0 = w[0] - left[0], r1 = w[1] - left[1];
        const double wr = total - wl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        // Minimizing weighted Gini == maximizing this score.
        const double score = (left[0] * left[0] + left[1] * left[1]) / wl + (r0 * r0 + r1 * r1) / wr;
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          double thr = 0.5 * (order[q].first + order[q + 1].first);
          if (!(thr < order[q + 1].first)) thr = order[q].first;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return make_leaf();

    std::vector<std::size_t> li, ri;
    for (auto i : idx)
      (x_.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? li : ri).push_back(i);
    const int l = grow(li, depth + 1);
    const int r = grow(ri, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    node.cover = tree_.nodes[static_cast<std::size_t>(l)].cover + tree_.nodes[static_cast<std::size_t>(r)].cover;
    return id;
  }

  const MatrixView& x_;
  std::span<const Label> y_;
  const ForestConfig& cfg_;
  std::array<double, 2> class_w_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> features_;
  std::size_t k_ = 1;
  const std::vector<std::uint32_t>* counts_ = nullptr;
  Tree tree_;
};

}  // namespace detail

inline ForestModel fit_forest(const MatrixView& x, std::span<const Label> y, const ForestConfig& cfg,
                              std::size_t jobs = 1, OobEstimate* oob = nullptr) {
  cfg.validate();
  if (x.cols == 0) throw DimensionError("forest fit requires at least one feature");
  if (x.rows != y.size()) throw DimensionError("forest fit: one label per row required");
  ForestModel model;
  model.config = cfg;
  model.n_features = x.cols;
  model.class_weights = cfg.balanced ? balanced_class_weights(y) : std::array<double, 2>{1.0, 1.0};
  if (!cfg.balanced) balanced_class_weights(y);  // still rejects single-class input
  model.trees.resize(cfg.n_trees);
  std::vector<std::vector<std::uint32_t>> in_bag(oob ? cfg.n_trees : 0);
  parallel_for(cfg.n_trees, jobs, [&](std::size_t t) {
    detail::TreeBuilder builder(x, y, cfg, model.class_weights, derive_seed(cfg.seed, t, 0x7EE));
    std::vector<std::uint32_t> counts;
    model.trees[t] = builder.build(counts);
    if (oob) in_bag[t] = std::move(counts);
  });
  if (oob) {
    oob->tcsi_prob_sum.assign(x.rows, 0.0);
    oob->votes.assign(x.rows, 0);
    for (std::size_t t = 0; t < cfg.n_trees; ++t)
      for (std::size_t i = 0; i < x.rows; ++i)
        if (in_bag[t][i] == 0) {
          oob->tcsi_prob_sum[i] += model.trees[t].predict(x.row(i))[1];
          ++oob->votes[i];
        }
  }
  return model;
}

inline std::array<double, 2> predict_proba(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features)
    throw DimensionError("predict_proba: expected " + std::to_string(model.n_features) + " features, got " +
                         std::to_string(x.size()));
  std::array<double, 2> p{0.0, 0.0};
  for (const auto& t : model.trees) {
    const auto& leaf = t.predict(x);
    p[0] += leaf[0];
    p[1] += leaf[1];
  }
  const double n = static_cast<double>(model.trees.size());
  return {p[0] / n, p[1] / n};
}

// --- serialization -----------------------------------------------------------

inline nlohmann::json to_json(const ForestModel& m) {
  nlohmann::json j;
  j["format"] = "attnshift-forest";
  j["version"] = 1;
  j["classes"] = {"EI", "TCSI"};
  j["n_features"] = m.n_features;
  j["class_weights"] = m.class_weights;
  j["config"] = {{"n_trees", m.config.n_trees},
                 {"max_depth", m.config.max_depth},
                 {"min_samples_split", m.config.min_samples_split},
                 {"balanced", m.config.balanced},
                 {"features_per_split", m.config.features_per_split},
                 {"bootstrap", m.config.bootstrap},
                 {"seed", m.config.seed}};
  j["feature_map"] = m.feature_map;
  auto& trees = j["trees"] = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf())
        nodes.push_back({{"cover", n.cover}, {"value", n.prob}});
      else
        nodes.push_back({{"cover", n.cover}, {"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                         {"right", n.right}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return j;
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "attnshift-forest") throw FormatError("model: bad field 'format'");
  if (j.value("version", 0) != 1) throw FormatError("model: unsupported version");
  ForestModel m;
  try {
    m.n_features = j.at("n_features").get<std::size_t>();
    m.class_weights = j.at("class_weights").get<std::array<double, 2>>();
    const auto& c = j.at("config");
    m.config.n_trees = c.at("n_trees").get<std::size_t>();
    m.config.max_depth = c.at("max_depth").get<std::size_t>();
    m.config.min_samples_split = c.at("min_samples_split").get<std::size_t>();
    m.config.balanced = c.at("balanced").get<bool>();
    m.config.features_per_split = c.at("features_per_split").get<std::size_t>();
    m.config.bootstrap = c.at("bootstrap").get<bool>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.feature_map = j.at("feature_map").get<std::vector<std::size_t>>();
    for (const auto& tj : j.at("trees")) {
      Tree t;
      for (const auto& nj : tj.at("nodes")) {
        TreeNode n;
        n.cover = nj.at("cover").get<double>();
        if (nj.contains("value")) {
          n.prob = nj.at("value").get<std::array<double, 2>>();
        } else {
          n.feature = nj.at("feature").get<int>();
          n.threshold = nj.at("threshold").get<double>();
          n.left = nj.at("left").get<int>();
          n.right = nj.at("right").get<int>();
        }
        t.nodes.push_back(n);
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
  for (const auto& t : m.trees)
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) continue;
      if (static_cast<std::size_t>(n.feature) >= m.n_features) throw FormatError("model: node feature id out of range");
      const auto sz = static_cast<int>(t.nodes.size());
      if (n.left <= 0 || n.right <= 0 || n.left >= sz || n.right >= sz) throw FormatError("model: bad child index");
    }
  if (!m.feature_map.empty() && m.feature_map.size() != m.n_features)
    throw FormatError("model: feature_map length does not match n_features");
  return m;
}

}  // namespace attnshift

#pragma once

// Path-dependent TreeSHAP for the forest's P(EI) output, an exhaustive
// subset-enumeration oracle over the same cover-weighted value function, and
// aggregation of attributions into band, feature-type and ROI shares.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnshift/common.hpp"
#include "attnshift/features.hpp"
#include "attnshift/forest.hpp"
#include "attnshift/montage.hpp"

namespace attnshift {

// Index into TreeNode::prob of the explained output. Positive attributions push
// towards EI.
inline constexpr std::size_t kExplainedClass = 0;

struct Attribution {
  std::vector<double> phi;
  double base = 0.0;    // expected output under the cover-weighted training distribution
  double output = 0.0;  // model output for the explained row
};

namespace detail {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

inline void extend_path(PathElement* path, std::size_t depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  const double d1 = static_cast<double>(depth + 1);
  for (std::size_t i = depth; i-- > 0;) {
    path[i + 1].weight += one_fraction * path[i].weight * static_cast<double>(i + 1) / d1;
    path[i].weight = zero_fraction * path[i].weight * static_cast<double>(depth - i) / d1;
  }
}

inline void unwind_path(PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next = path[depth].weight;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * d1 / (static_cast<double>(i + 1) * one);
      next = tmp - path[i].weight * zero * static_cast<double>(depth - i) / d1;
    } else {
      path[i].weight = path[i].weight * d1 / (zero * static_cast<double>(depth - i));
    }
  }
  for (std::size_t i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight of the path with element `index` removed.
inline double unwound_sum(const PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next = path[depth].weight;
  double total = 0.0;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = next * d1 / (static_cast<double>(i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * static_cast<double>(depth - i) / d1;
    } else {
      total += path[i].weight / (zero * static_cast<double>(depth - i) / d1);
    }
  }
  return total;
}

class TreeShapRecursion {
 public:
  TreeShapRecursion(const Tree& tree, std::span<const double> x, std::span<double> phi, double scale)
      : tree_(tree), x_(x), phi_(phi), scale_(scale) {
    const std::size_t max_depth = tree.depth() + 2;
    storage_.resize(max_depth * (max_depth + 1) / 2 + max_depth + 1);
  }

  void run() { recurse(0, storage_.data(), 0, 1.0, 1.0, -1); }

 private:
  void recurse(std::size_t node, PathElement* parent, std::size_t depth, double zero_fraction, double one_fraction,
               int feature) {
    PathElement* path = parent + depth;
    if (depth > 0) std::copy(parent, parent + depth, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);
    const TreeNode& n = tree_.nodes[node];
    if (n.is_leaf()) {
      const double value = n.prob[kExplainedClass];
      for (std::size_t i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        phi_[static_cast<std::size_t>(path[i].feature)] +=
            scale_ * w * (path[i].one_fraction - path[i].zero_fraction) * value;
      }
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const bool go_left = x_[f] <= n.threshold;
    const auto hot = static_cast<std::size_t>(go_left ? n.left : n.right);
    const auto cold = static_cast<std::size_t>(go_left ? n.right : n.left);

    double incoming_zero = 1.0, incoming_one = 1.0;
    std::size_t k = 0;
    for (; k <= depth; ++k)
      if (path[k].feature == n.feature) break;
    if (k != depth + 1) {
      incoming_zero = path[k].zero_fraction;
      incoming_one = path[k].one_fraction;
      unwind_path(path, depth, k);
      --depth;
    }
    const double hot_frac = tree_.nodes[hot].cover / n.cover;
    const double cold_frac = tree_.nodes[cold].cover / n.cover;
    recurse(hot, path, depth + 1, hot_frac * incoming_zero, incoming_one, n.feature);
    recurse(cold, path, depth + 1, cold_frac * incoming_zero, 0.0, n.feature);
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::span<double> phi_;
  double scale_;
  std::vector<PathElement> storage_;
};

}  // namespace detail

// Cover-weighted expectation of the explained output.
inline double expected_value(const Tree& tree, std::size_t node = 0) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf()) return n.prob[kExplainedClass];
  const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
  return (tree.nodes[l].cover * expected_value(tree, l) + tree.nodes[r].cover * expected_value(tree, r)) / n.cover;
}

// Adds scale * phi(tree, x) into `phi`.
inline void tree_shap_accumulate(const Tree& tree, std::span<const double> x, std::span<double> phi,
                                 double scale = 1.0) {
  detail::TreeShapRecursion(tree, x, phi, scale).run();
}

inline Attribution tree_shap(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features)
    throw DimensionError("tree_shap: expected " + std::to_string(model.n_features) + " features, got " +
                         std::to_string(x.size()));
  for (double v : x)
    if (!std::isfinite(v)) throw DimensionError("tree_shap: non-finite input");
  Attribution a;
  a.phi.assign(model.n_features, 0.0);
  const double scale = 1.0 / static_cast<double>(model.trees.size());
  for (const auto& t : model.trees) {
    tree_shap_accumulate(t, x, a.phi, scale);
    a.base += expected_value(t) * scale;
  }
  a.output = predict_proba(model, x)[kExplainedClass];
  return a;
}

inline constexpr std::size_t kBruteForceFeatureCap = 12;

// Exact Shapley values of v(S) = E[tree(x) | x_S] over every subset of the
// tree's split features. Oracle for tree_shap; exponential in feature count.
inline std::vector<double> brute_shapley(const Tree& tree, std::span<const double> x, std::size_t n_features) {
  std::vector<int> used;
  for (const auto& n : tree.nodes)
    if (!n.is_leaf() && std::find(used.begin(), used.end(), n.feature) == used.end()) used.push_back(n.feature);
  std::sort(used.begin(), used.end());
  const std::size_t k = used.size();
  if (k > kBruteForceFeatureCap)
    throw Error("brute_shapley: tree uses " + std::to_string(k) + " features, cap is " +
                std::to_string(kBruteForceFeatureCap));

  auto value = [&](std::size_t mask) {
    auto rec = [&](auto& self, std::size_t node) -> double {
      const auto& n = tree.nodes[node];
      if (n.is_leaf()) return n.prob[kExplainedClass];
      const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
      const auto pos = static_cast<std::size_t>(std::find(used.begin(), used.end(), n.feature) - used.begin());
      if (mask & (std::size_t{1} << pos))
        return self(self, x[static_cast<std::size_t>(n.feature)] <= n.threshold ? l : r);
      return (tree.nodes[l].cover * self(self, l) + tree.nodes[r].cover * self(self, r)) / n.cover;
    };
    return rec(rec, 0);
  };

  const std::size_t subsets = std::size_t{1} << k;
  std::vector<double> v(subsets);
  for (std::size_t m = 0; m < subsets; ++m) v[m] = value(m);

  // weight(s) = s! (k - s - 1)! / k!
  std::vector<double> fact(k + 1, 1.0);
  for (std::size_t i = 1; i <= k; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  std::vector<double> phi(n_features, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double s = 0.0;
    for (std::size_t m = 0; m < subsets; ++m) {
      if (m & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(m));
      s += fact[size] * fact[k - size - 1] / fact[k] * (v[m | bit] - v[m]);
    }
    phi[static_cast<std::size_t>(used[i])] = s;
  }
  return phi;
}

// --- aggregation ---------------------------------------------------------------

struct AttributionReport {
  std::string participant;
  std::size_t n_trials = 0;
  std::vector<double> mean_abs;  // per feature
  std::array<double, kNumBands> band{};
  std::array<double, kNumCategories> category{};
  std::array<double, kNumSubtypes> subtype{};
  std::array<double, kNumRois> roi{};
};

namespace detail {

template <std::size_t N>
void normalize_shares(std::array<double, N>& a) {
  double total = 0.0;
  for (double v : a) total += v;
  if (total > 0.0) {
    for (double& v : a) v /= total;
  } else {
    a.fill(1.0 / static_cast<double>(N));
  }
}

}  // namespace detail

// Mean |phi| per feature over trials, summed into groups and normalized so each
// level sums to one. ROI level: intra-ROI features go to their ROI; connectivity
// and asymmetry split half to each endpoint; global and gradient features are
// excluded. A level with no mass is reported as uniform.
inline AttributionReport aggregate(std::span<const std::vector<double>> phis, std::span<const FeatureMeta> metas) {
  AttributionReport r;
  r.n_trials = phis.size();
  r.mean_abs.assign(metas.size(), 0.0);
  for (const auto& phi : phis) {
    if (phi.size() != metas.size())
      throw DimensionError("aggregate: attribution length " + std::to_string(phi.size()) + " != feature count " +
                           std::to_string(metas.size()));
    for (std::size_t j = 0; j < phi.size(); ++j) r.mean_abs[j] += std::abs(phi[j]);
  }
  if (!phis.empty())
    for (auto& v : r.mean_abs) v /= static_cast<double>(phis.size());

  for (std::size_t j = 0; j < metas.size(); ++j) {
    const double v = r.mean_abs[j];
    const auto& m = metas[j];
    r.band[static_cast<std::size_t>(m.band)] += v;
    r.category[static_cast<std::size_t>(m.category)] += v;
    r.subtype[static_cast<std::size_t>(m.subtype)] += v;
    if (m.category == Category::Global || m.subtype == Subtype::AnteriorPosteriorGradient) continue;
    const double share = v / static_cast<double>(m.rois.size());
    for (auto roi : m.rois) r.roi[roi] += share;
  }
  detail::normalize_shares(r.band);
  detail::normalize_shares(r.category);
  detail::normalize_shares(r.subtype);
  detail::normalize_shares(r.roi);
  return r;
}

inline AttributionReport aggregate(std::span<const Attribution> attributions, std::span<const FeatureMeta> metas) {
  std::vector<std::vector<double>> phis;
  phis.reserve(attributions.size());
  for (const auto& a : attributions) phis.push_back(a.phi);
  return aggregate(std::span<const std::vector<double>>(phis), metas);
}

inline nlohmann::json to_json(const AttributionReport& r) {
  const auto& m = standard_montage();
  nlohmann::json j;
  j["participant"] = r.participant;
  j["n_trials"] = r.n_trials;
  auto& band = j["band"] = nlohmann::json::object();
  for (std::size_t b = 0; b < kNumBands; ++b) band[kBands[b].name] = r.band[b];
  auto& cat = j["category"] = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumCategories; ++c) cat[category_name(static_cast<Category>(c))] = r.category[c];
  auto& st = j["subtype"] = nlohmann::json::object();
  for (std::size_t s = 0; s < kNumSubtypes; ++s) st[subtype_name(static_cast<Subtype>(s))] = r.subtype[s];
  auto& roi = j["roi"] = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumRois; ++i) roi[m.rois()[i].name] = r.roi[i];
  return j;
}

}  // namespace attnshift

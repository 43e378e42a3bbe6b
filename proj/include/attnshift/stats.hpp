#pragma once

// Descriptive statistics used by feature extraction. Population (ddof = 0)
// moments throughout; a sample whose spread is zero to rounding has zero
// variance, skewness and excess kurtosis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace attnshift::stats {

inline bool is_flat(std::span<const double> x) {
  if (x.empty()) return true;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double scale = std::max(std::abs(*lo), std::abs(*hi));
  return *hi - *lo <= 1e-12 * scale;
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  if (is_flat(x)) return x[0];
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double central_moment(std::span<const double> x, double mu, int order) {
  double s = 0.0;
  for (double v : x) s += std::pow(v - mu, order);
  return s / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  if (is_flat(x)) return 0.0;
  return central_moment(x, mean(x), 2);
}

inline double sd(std::span<const double> x) { return std::sqrt(variance(x)); }

inline double skewness(std::span<const double> x) {
  if (is_flat(x)) return 0.0;
  const double mu = mean(x);
  const double m2 = central_moment(x, mu, 2);
  return central_moment(x, mu, 3) / std::pow(m2, 1.5);
}

// Excess kurtosis.
inline double kurtosis(std::span<const double> x) {
  if (is_flat(x)) return 0.0;
  const double mu = mean(x);
  const double m2 = central_moment(x, mu, 2);
  return central_moment(x, mu, 4) / (m2 * m2) - 3.0;
}

// Linear-interpolation quantile on sorted data, position p * (n - 1).
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Least-squares slope of x against its index.
inline double slope(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2 || is_flat(x)) return 0.0;
  const double tbar = static_cast<double>(n - 1) / 2.0;
  const double xbar = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tbar;
    num += dt * (x[i] - xbar);
    den += dt * dt;
  }
  return num / den;
}

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;
};

// Sample Pearson correlation; a flat series yields r = 0 flagged degenerate.
inline PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return {0.0, true};
  if (is_flat(x) || is_flat(y)) return {0.0, true};
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

}  // namespace attnshift::stats

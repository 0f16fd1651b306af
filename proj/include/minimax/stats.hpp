#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "minimax/linalg.hpp"

namespace minimax {

/// Linear-interpolation quantile (the common "type 7" rule) of unsorted data.
inline double quantile(Vec values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = p * (static_cast<double>(values.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[hi];
}

struct BoxplotStats {
  double min, q1, median, q3, max;
  int n;
};

inline BoxplotStats boxplot_stats(const Vec& values) {
  if (values.empty()) throw std::invalid_argument("boxplot_stats: empty sample");
  BoxplotStats s{};
  s.min = quantile(values, 0.0);
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  s.max = quantile(values, 1.0);
  s.n = static_cast<int>(values.size());
  return s;
}

inline double mean(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_stddev(const Vec& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

struct LogMeanExp {
  double value;   // ln( mean(exp(x_i)) )
  double stderr_; // delta-method standard error of value
};

/// Shift-stable ln(mean(exp(x))) with a standard error for the log estimate.
inline LogMeanExp log_mean_exp(const Vec& x) {
  if (x.empty()) throw std::invalid_argument("log_mean_exp: empty sample");
  const double m = *std::max_element(x.begin(), x.end());
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(x[i] - m);
  const double my = mean(y);
  const double se = sample_stddev(y) / std::sqrt(static_cast<double>(y.size()));
  return {m + std::log(my), se / my};
}

inline double binomial_stderr(double p, int n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

}  // namespace minimax

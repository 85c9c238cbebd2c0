#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "panelkit/errors.hpp"

namespace panelkit::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("mean of empty series");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// population variance (divide by n)
inline double variance(std::span<const double> xs, double m) {
  if (xs.empty()) throw ValidationError("variance of empty series");
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
  return variance(xs, mean(xs));
}

// unbiased sample variance (divide by n-1)
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ValidationError("sample variance needs n >= 2");
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double norm_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// linear-interpolation quantile (the common "type 7" rule); sorts a copy
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ValidationError("quantile of empty series");
  if (p < 0.0 || p > 1.0) throw ValidationError("quantile level outside [0,1]");
  std::sort(xs.begin(), xs.end());
  double pos = p * static_cast<double>(xs.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

}  // namespace panelkit::stats

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "panelkit/data.hpp"

namespace panelkit::dpt {

// Signed per-item disagreement between two groups: delta_star[i] is
// f_star(item, g1) - f_star(item, g2); delta_hat[i] is the same difference
// of an estimator's per-item means. Only items present for both groups in
// both sources appear.
struct DifferentialSeries {
  std::string g1;
  std::string g2;
  std::vector<std::string> item_ids;
  std::vector<double> delta_star;
  std::vector<double> delta_hat;

  std::size_t n_items() const { return item_ids.size(); }
  void validate() const;  // matched lengths, every delta within [-1, 1]
};

// Per-item mean estimate keyed by (item, group).
using EstimatorMeans = std::map<data::Key, double>;

// Inner join of truth and estimator means over (item, g1) x (item, g2).
// Items missing on any of the four sides are excluded; an empty join is a
// validation error. Output is sorted by item id.
DifferentialSeries differentials(const data::GroundTruth& truth,
                                 const EstimatorMeans& est_means,
                                 const std::string& g1, const std::string& g2);

// Product-moment correlation of delta_hat against delta_star.
// Needs at least 3 items; a constant series has no defined correlation and
// raises UndefinedStatError rather than returning NaN.
double pearson(const DifferentialSeries& series);

// Fraction of items whose disagreement points the same way, where any value
// within zero_tol of zero counts as zero and zero matches only zero.
double directional_accuracy(const DifferentialSeries& series,
                            double zero_tol = 0.0);

struct BootstrapCi {
  double low = 0.0;
  double high = 0.0;
  std::uint64_t n_redrawn = 0;  // constant resamples that were redrawn
};

// Percentile 95% interval of the correlation over B item-level resamples
// with replacement. A resample whose series comes out constant is redrawn
// (up to an attempt cap) and counted. Each resample uses its own substream
// of `seed`, so the interval is independent of evaluation order. The
// returned interval always contains the point estimate.
BootstrapCi bootstrap_ci(const DifferentialSeries& series,
                         std::uint64_t B = 2000, std::uint64_t seed = 0);

enum class Sided { two_sided, one_sided };

struct FisherResult {
  double z_stat = 0.0;
  double p_value = 1.0;
};

// Compares two correlations via the variance-stabilizing transform
// z_i = atanh(rho_i): z_stat = (z1 - z2) / sqrt(1/(n1-3) + 1/(n2-3)),
// p from the standard normal. One-sided tests rho1 > rho2.
FisherResult fisher_z_test(double rho1, std::size_t n1, double rho2,
                           std::size_t n2, Sided sided = Sided::two_sided);

struct DptReport {
  std::string g1;
  std::string g2;
  double rho = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double directional_accuracy = 0.0;
  std::size_t n_items = 0;
  double sigma_delta_star = 0.0;  // population sd of delta_star
  std::uint64_t ci_redrawn = 0;
  std::uint64_t B = 0;
  std::uint64_t seed = 0;
  double zero_tol = 0.0;
};

// Everything above in one pass over a series.
DptReport analyze(const DifferentialSeries& series, std::uint64_t B = 2000,
                  std::uint64_t seed = 0, double zero_tol = 0.0);

}  // namespace panelkit::dpt

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panelkit/annotator.hpp"
#include "panelkit/data.hpp"

namespace panelkit::bootstrap {

struct Options {
  std::uint64_t B = 1000;   // resamples per item
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // When pool_size^k stays at or below this, every possible draw is
  // enumerated instead of resampled, giving the exact infinite-B values.
  std::uint64_t exhaustive_limit = 1000000;
};

struct ItemMetrics {
  std::string item_id;
  std::string group_id;
  std::string estimator_id;
  std::uint64_t k = 1;
  double mse = 0.0;
  double bias = 0.0;      // signed: bootstrap mean minus truth
  double variance = 0.0;
  double bootstrap_mean = 0.0;
  bool exhaustive = false;
  double mc_se = 0.0;     // resampling standard error of mse; 0 if exhaustive
};

// Dataset-level averages. Bias shows up twice on purpose: the signed mean
// is what bias plots show, while the mean of squared per-item biases is the
// piece that actually adds up with mean_variance to mean_mse.
struct AggregateMetrics {
  std::string group_id;
  std::string estimator_id;
  std::uint64_t k = 1;
  double mean_mse = 0.0;
  double mean_signed_bias = 0.0;
  double mean_sq_bias = 0.0;
  double mean_variance = 0.0;
  double mc_se = 0.0;
  std::size_t n_items = 0;
};

struct Provenance {
  std::uint64_t B = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> k_range;
  std::size_t n_pools = 0;            // pools offered
  std::size_t n_evaluated = 0;        // pools with a ground-truth entry
  std::size_t n_skipped_no_truth = 0;
};

// An MSE(k) curve that rises between consecutive budgets by more than twice
// the resampling noise; anything smaller is expected jitter.
struct MonotonicityFlag {
  std::string group_id;
  std::string estimator_id;
  std::uint64_t k_prev = 0;
  std::uint64_t k = 0;
  double increase = 0.0;
  double se = 0.0;
};

struct MetricsReport {
  Provenance provenance;
  std::vector<ItemMetrics> items;          // sorted by (group, est, item, k)
  std::vector<AggregateMetrics> aggregates;  // sorted by (group, est, k)
  std::vector<MonotonicityFlag> flags;
};

// Metrics over an explicit collection of estimate draws for one item:
// mse = mean (d - f_star)^2, bias = mean(d) - f_star, variance around the
// draw mean. Verifies mse = bias^2 + variance to 1e-9 relative before
// returning. Shared by the resampler and the scenario simulator.
ItemMetrics metrics_from_draws(std::span<const double> draws, double f_star);

// Sorts the per-item rows, fills the per-(group, estimator, k) aggregates
// and monotonicity flags, and attaches provenance. The resampler and the
// scenario simulator both finish their reports here.
MetricsReport assemble_report(std::vector<ItemMetrics> items,
                              Provenance provenance);

// For every pool with a ground-truth entry: B resamples of k values drawn
// with replacement (or exhaustive enumeration when cheap enough), averaged
// into per-item and dataset-level metrics. Resampling uses substreams
// derived from (seed, item, group, estimator, k), so results do not depend
// on iteration order or thread count.
MetricsReport bootstrap_metrics(const data::Pools& pools,
                                const data::GroundTruth& truth,
                                std::uint64_t k, const Options& opts);

MetricsReport budget_curve(const data::Pools& pools,
                           const data::GroundTruth& truth,
                           const std::vector<std::uint64_t>& k_range,
                           const Options& opts);

// Table-level conveniences; perspective annotations are pooled under the
// estimator id "human_pt".
MetricsReport bootstrap_metrics(const data::PredictionTable& preds,
                                const data::GroundTruth& truth,
                                std::uint64_t k, const Options& opts);
MetricsReport bootstrap_metrics(const data::AnnotationTable& table,
                                const data::GroundTruth& truth,
                                std::uint64_t k, const Options& opts);
MetricsReport budget_curve(const data::PredictionTable& preds,
                           const data::GroundTruth& truth,
                           const std::vector<std::uint64_t>& k_range,
                           const Options& opts);
MetricsReport budget_curve(const data::AnnotationTable& table,
                           const data::GroundTruth& truth,
                           const std::vector<std::uint64_t>& k_range,
                           const Options& opts);

// Synthetic estimator whose sample i is the weighted mean of the members'
// samples i, per (item, group). Pools of unequal size are truncated to the
// smallest member; keys missing from any member are dropped. Both events
// are reported in the notes.
struct MixNote {
  std::string item_id;
  std::string group_id;
  std::size_t kept = 0;     // samples in the mixed pool (0 when dropped)
  std::size_t largest = 0;  // largest member pool before truncation
  bool dropped = false;
};

struct MixResult {
  data::PredictionTable table;
  std::string mixed_id;
  std::vector<MixNote> notes;
};

MixResult mix_estimators(const data::PredictionTable& preds,
                         const std::vector<std::string>& members,
                         const std::vector<double>& weights = {},
                         std::string mixed_id = "");

// Method-of-moments estimates of an estimator class from its pools:
//   mu_hat   mean over items of (pool mean - f_star)
//   v_hat    mean over items of the mean squared residual, residual being
//            prediction - f_star - mu_hat
//   gamma_hat  mean average pairwise residual covariance over items with at
//              least two samples, divided by v_hat
// gamma_hat is absent (with a note) when no item has two samples or when
// v_hat is zero; it is clamped to [-1,1] and flagged outside [0,1).
struct FittedSpec {
  double mu_hat = 0.0;
  double v_hat = 0.0;
  std::optional<double> gamma_hat;
  bool gamma_flagged = false;
  std::string gamma_note;
  std::size_t n_items = 0;
  std::size_t n_items_pairs = 0;
};

using FittedSpecs = std::map<std::pair<std::string, std::string>, FittedSpec>;

FittedSpecs fit_spec(const data::Pools& pools, const data::GroundTruth& truth);
FittedSpecs fit_spec(const data::PredictionTable& preds,
                     const data::GroundTruth& truth);
FittedSpecs fit_spec(const data::AnnotationTable& table,
                     const data::GroundTruth& truth);

// Fitted parameters as a spec usable by the analytic machinery. The mu
// split is unavailable from data, so the total lands on mu_w; the variance
// lands on var_eps; a gamma outside [0,1) is clamped to the nearest value
// the analytics accept.
annotator::AnnotatorSpec to_annotator_spec(const FittedSpec& fitted);

}  // namespace panelkit::bootstrap

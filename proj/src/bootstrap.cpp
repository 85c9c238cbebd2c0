#include "panelkit/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <string>

#include "panelkit/errors.hpp"
#include "panelkit/rng.hpp"
#include "panelkit/stats.hpp"

namespace panelkit::bootstrap {

namespace {

// pool_size^k if it stays within limit, otherwise nothing
std::optional<std::uint64_t> exhaustive_count(std::size_t pool_size,
                                              std::uint64_t k,
                                              std::uint64_t limit) {
  std::uint64_t count = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    if (count > limit / pool_size) return std::nullopt;
    count *= pool_size;
  }
  return count;
}

// every pool^k tuple, via an odometer over index digits
void enumerate_draws(const std::vector<double>& pool, std::uint64_t k,
                     std::vector<double>& draws) {
  std::vector<std::size_t> digits(k, 0);
  double sum = pool[0] * static_cast<double>(k);
  const double inv_k = 1.0 / static_cast<double>(k);
  for (;;) {
    draws.push_back(sum * inv_k);
    std::size_t pos = k;
    while (pos > 0) {
      --pos;
      sum -= pool[digits[pos]];
      if (++digits[pos] < pool.size()) {
        sum += pool[digits[pos]];
        break;
      }
      digits[pos] = 0;
      sum += pool[0];
      if (pos == 0) return;
    }
  }
}

void resample_draws(const std::vector<double>& pool, std::uint64_t k,
                    std::uint64_t B, rng::Stream& stream,
                    std::vector<double>& draws) {
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::uint64_t b = 0; b < B; ++b) {
    double sum = 0.0;
    for (std::uint64_t i = 0; i < k; ++i)
      sum += pool[stream.below(pool.size())];
    draws.push_back(sum * inv_k);
  }
}

ItemMetrics eval_pool(const data::PoolKey& key,
                      const std::vector<double>& pool, double f_star,
                      std::uint64_t k, const Options& opts) {
  if (pool.empty())
    throw ValidationError("empty prediction pool for (item='" + key.item_id +
                          "', group='" + key.group_id + "', estimator='" +
                          key.estimator_id + "')");

  std::vector<double> draws;
  bool exhaustive = false;
  if (auto count = exhaustive_count(pool.size(), k, opts.exhaustive_limit)) {
    draws.reserve(*count);
    enumerate_draws(pool, k, draws);
    exhaustive = true;
  } else {
    auto stream = rng::SubstreamKey{}
                      .with("bootstrap")
                      .with(key.item_id)
                      .with(key.group_id)
                      .with(key.estimator_id)
                      .with(k)
                      .stream(opts.seed);
    draws.reserve(opts.B);
    resample_draws(pool, k, opts.B, stream, draws);
  }

  ItemMetrics m = metrics_from_draws(draws, f_star);
  m.item_id = key.item_id;
  m.group_id = key.group_id;
  m.estimator_id = key.estimator_id;
  m.k = k;
  m.exhaustive = exhaustive;
  if (exhaustive) m.mc_se = 0.0;
  return m;
}

MetricsReport evaluate(const data::Pools& pools, const data::GroundTruth& truth,
                       const std::vector<std::uint64_t>& k_range,
                       const Options& opts) {
  if (opts.B < 1) throw ValidationError("resample count B must be at least 1");
  if (k_range.empty()) throw ValidationError("k range must be nonempty");
  for (std::uint64_t k : k_range)
    if (k < 1) throw ValidationError("budget k must be at least 1");

  MetricsReport report;
  report.provenance.B = opts.B;
  report.provenance.seed = opts.seed;
  report.provenance.k_range = k_range;
  report.provenance.n_pools = pools.size();

  struct Job {
    const data::PoolKey* key;
    const std::vector<double>* pool;
    double f_star;
    std::uint64_t k;
  };
  std::vector<Job> jobs;
  for (const auto& [key, pool] : pools) {
    auto it = truth.find(data::Key{key.item_id, key.group_id});
    if (it == truth.end()) {
      ++report.provenance.n_skipped_no_truth;
      continue;
    }
    ++report.provenance.n_evaluated;
    for (std::uint64_t k : k_range)
      jobs.push_back(Job{&key, &pool, it->second.f_star, k});
  }
  if (jobs.empty())
    throw ValidationError(
        "no evaluable pools: " + std::to_string(pools.size()) +
        " pools offered, " +
        std::to_string(report.provenance.n_skipped_no_truth) +
        " lacked ground truth, " + std::to_string(truth.size()) +
        " ground-truth entries");

  report.items.resize(jobs.size());
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      report.items[i] =
          eval_pool(*jobs[i].key, *jobs[i].pool, jobs[i].f_star, jobs[i].k,
                    opts);
  };
  unsigned threads = std::max(1u, opts.threads);
  if (threads == 1 || jobs.size() < 2) {
    run_range(0, jobs.size());
  } else {
    std::vector<std::future<void>> futures;
    std::size_t chunk = (jobs.size() + threads - 1) / threads;
    for (std::size_t lo = 0; lo < jobs.size(); lo += chunk) {
      std::size_t hi = std::min(lo + chunk, jobs.size());
      futures.push_back(
          std::async(std::launch::async, run_range, lo, hi));
    }
    for (auto& f : futures) f.get();
  }

  return assemble_report(std::move(report.items),
                         std::move(report.provenance));
}

}  // namespace

ItemMetrics metrics_from_draws(std::span<const double> draws, double f_star) {
  if (draws.empty())
    throw ValidationError("metrics need at least one estimate draw");
  auto n = static_cast<double>(draws.size());

  double sum = 0.0;
  double sum_sq_err = 0.0;
  double sum_sq_sq_err = 0.0;
  for (double d : draws) {
    sum += d;
    double e = (d - f_star) * (d - f_star);
    sum_sq_err += e;
    sum_sq_sq_err += e * e;
  }
  double mean = sum / n;
  double mse = sum_sq_err / n;
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= n;

  ItemMetrics m;
  m.bootstrap_mean = mean;
  m.mse = mse;
  m.bias = mean - f_star;
  m.variance = var;
  double var_of_sq_err = std::max(0.0, sum_sq_sq_err / n - mse * mse);
  m.mc_se = std::sqrt(var_of_sq_err / n);

  double identity_gap = std::abs(m.mse - (m.bias * m.bias + m.variance));
  if (identity_gap > 1e-9 * std::max(m.mse, 1e-30))
    throw Error("mse decomposition identity violated: gap " +
                std::to_string(identity_gap));
  return m;
}

MetricsReport assemble_report(std::vector<ItemMetrics> items,
                              Provenance provenance) {
  MetricsReport report;
  report.provenance = std::move(provenance);
  report.items = std::move(items);
  std::sort(report.items.begin(), report.items.end(),
            [](const ItemMetrics& a, const ItemMetrics& b) {
              return std::tie(a.group_id, a.estimator_id, a.item_id, a.k) <
                     std::tie(b.group_id, b.estimator_id, b.item_id, b.k);
            });

  // dataset-level means per (group, estimator, k)
  std::map<std::tuple<std::string, std::string, std::uint64_t>,
           AggregateMetrics>
      agg;
  std::map<std::tuple<std::string, std::string, std::uint64_t>, double> se2;
  for (const auto& m : report.items) {
    auto key = std::make_tuple(m.group_id, m.estimator_id, m.k);
    auto& a = agg[key];
    a.group_id = m.group_id;
    a.estimator_id = m.estimator_id;
    a.k = m.k;
    a.mean_mse += m.mse;
    a.mean_signed_bias += m.bias;
    a.mean_sq_bias += m.bias * m.bias;
    a.mean_variance += m.variance;
    se2[key] += m.mc_se * m.mc_se;
    ++a.n_items;
  }
  for (auto& [key, a] : agg) {
    auto n = static_cast<double>(a.n_items);
    a.mean_mse /= n;
    a.mean_signed_bias /= n;
    a.mean_sq_bias /= n;
    a.mean_variance /= n;
    a.mc_se = std::sqrt(se2[key]) / n;
    report.aggregates.push_back(a);
  }

  // flag curve increases bigger than twice the resampling noise
  for (std::size_t i = 1; i < report.aggregates.size(); ++i) {
    const auto& prev = report.aggregates[i - 1];
    const auto& cur = report.aggregates[i];
    if (prev.group_id != cur.group_id ||
        prev.estimator_id != cur.estimator_id)
      continue;
    double increase = cur.mean_mse - prev.mean_mse;
    double se = std::sqrt(prev.mc_se * prev.mc_se + cur.mc_se * cur.mc_se);
    if (increase > 2.0 * se)
      report.flags.push_back(MonotonicityFlag{cur.group_id, cur.estimator_id,
                                              prev.k, cur.k, increase, se});
  }
  return report;
}

MetricsReport bootstrap_metrics(const data::Pools& pools,
                                const data::GroundTruth& truth,
                                std::uint64_t k, const Options& opts) {
  return evaluate(pools, truth, {k}, opts);
}

MetricsReport budget_curve(const data::Pools& pools,
                           const data::GroundTruth& truth,
                           const std::vector<std::uint64_t>& k_range,
                           const Options& opts) {
  return evaluate(pools, truth, k_range, opts);
}

MetricsReport bootstrap_metrics(const data::PredictionTable& preds,
                                const data::GroundTruth& truth,
                                std::uint64_t k, const Options& opts) {
  return bootstrap_metrics(data::pools_from_predictions(preds), truth, k,
                           opts);
}

MetricsReport bootstrap_metrics(const data::AnnotationTable& table,
                                const data::GroundTruth& truth,
                                std::uint64_t k, const Options& opts) {
  return bootstrap_metrics(data::pools_from_perspective(table), truth, k,
                           opts);
}

MetricsReport budget_curve(const data::PredictionTable& preds,
                           const data::GroundTruth& truth,
                           const std::vector<std::uint64_t>& k_range,
                           const Options& opts) {
  return budget_curve(data::pools_from_predictions(preds), truth, k_range,
                      opts);
}

MetricsReport budget_curve(const data::AnnotationTable& table,
                           const data::GroundTruth& truth,
                           const std::vector<std::uint64_t>& k_range,
                           const Options& opts) {
  return budget_curve(data::pools_from_perspective(table), truth, k_range,
                      opts);
}

MixResult mix_estimators(const data::PredictionTable& preds,
                         const std::vector<std::string>& members,
                         const std::vector<double>& weights,
                         std::string mixed_id) {
  if (members.empty())
    throw ValidationError("mixing needs at least one member estimator");
  if (std::set<std::string>(members.begin(), members.end()).size() !=
      members.size())
    throw ValidationError("member estimator ids must be distinct");
  std::vector<double> w = weights;
  if (w.empty()) {
    w.assign(members.size(), 1.0);
  } else if (w.size() != members.size()) {
    throw ValidationError("got " + std::to_string(w.size()) +
                          " weights for " + std::to_string(members.size()) +
                          " members");
  }
  double wsum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw ValidationError("weights must be non-negative");
    wsum += x;
  }
  if (!(wsum > 0.0)) throw ValidationError("weights must not all be zero");
  for (double& x : w) x /= wsum;

  data::Pools pools = data::pools_from_predictions(preds);
  std::set<std::string> known;
  for (const auto& [key, pool] : pools) known.insert(key.estimator_id);
  for (const auto& m : members) {
    if (!known.contains(m))
      throw ValidationError("unknown member estimator '" + m + "'");
  }

  if (mixed_id.empty()) {
    mixed_id = "mix(";
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i) mixed_id += '+';
      mixed_id += members[i];
    }
    mixed_id += ')';
  }

  // keys touched by any member
  std::set<data::Key> keys;
  for (const auto& [key, pool] : pools) {
    if (std::find(members.begin(), members.end(), key.estimator_id) !=
        members.end())
      keys.insert(data::Key{key.item_id, key.group_id});
  }

  MixResult result;
  result.mixed_id = mixed_id;
  for (const auto& key : keys) {
    std::vector<const std::vector<double>*> member_pools;
    std::size_t min_count = SIZE_MAX, max_count = 0;
    bool complete = true;
    for (const auto& m : members) {
      auto it = pools.find(data::PoolKey{key.group_id, m, key.item_id});
      if (it == pools.end()) {
        complete = false;
        break;
      }
      member_pools.push_back(&it->second);
      min_count = std::min(min_count, it->second.size());
      max_count = std::max(max_count, it->second.size());
    }
    if (!complete) {
      result.notes.push_back(MixNote{key.item_id, key.group_id, 0, max_count,
                                     true});
      continue;
    }
    if (min_count != max_count)
      result.notes.push_back(MixNote{key.item_id, key.group_id, min_count,
                                     max_count, false});
    for (std::size_t i = 0; i < min_count; ++i) {
      double v = 0.0;
      for (std::size_t m = 0; m < members.size(); ++m)
        v += w[m] * (*member_pools[m])[i];
      result.table.rows.push_back(data::Prediction{
          key.item_id, key.group_id, mixed_id,
          static_cast<std::int64_t>(i), v});
    }
  }
  return result;
}

FittedSpecs fit_spec(const data::Pools& pools,
                     const data::GroundTruth& truth) {
  // group pools by (group, estimator)
  std::map<std::pair<std::string, std::string>,
           std::vector<std::pair<const std::vector<double>*, double>>>
      by_class;
  for (const auto& [key, pool] : pools) {
    auto it = truth.find(data::Key{key.item_id, key.group_id});
    if (it == truth.end()) continue;
    if (pool.empty())
      throw ValidationError("empty prediction pool for (item='" +
                            key.item_id + "', group='" + key.group_id + "')");
    by_class[{key.group_id, key.estimator_id}].emplace_back(
        &pool, it->second.f_star);
  }
  if (by_class.empty())
    throw ValidationError("no evaluable pools to fit: no pool overlaps the "
                          "ground-truth table");

  FittedSpecs fitted;
  for (const auto& [class_key, items] : by_class) {
    FittedSpec f;
    f.n_items = items.size();

    double mu_acc = 0.0;
    for (const auto& [pool, f_star] : items)
      mu_acc += stats::mean(*pool) - f_star;
    f.mu_hat = mu_acc / static_cast<double>(items.size());

    double v_acc = 0.0;
    double cov_acc = 0.0;
    for (const auto& [pool, f_star] : items) {
      double sum_e = 0.0, sum_e2 = 0.0;
      for (double p : *pool) {
        double e = p - f_star - f.mu_hat;
        sum_e += e;
        sum_e2 += e * e;
      }
      auto kx = static_cast<double>(pool->size());
      v_acc += sum_e2 / kx;
      if (pool->size() >= 2) {
        cov_acc += (sum_e * sum_e - sum_e2) / (kx * (kx - 1.0));
        ++f.n_items_pairs;
      }
    }
    f.v_hat = v_acc / static_cast<double>(items.size());

    if (f.n_items_pairs == 0) {
      f.gamma_note = "no item has two or more samples";
    } else if (f.v_hat <= 0.0) {
      f.gamma_note = "zero residual variance";
    } else {
      double g = (cov_acc / static_cast<double>(f.n_items_pairs)) / f.v_hat;
      g = std::clamp(g, -1.0, 1.0);
      f.gamma_hat = g;
      f.gamma_flagged = !(g >= 0.0 && g < 1.0);
    }
    fitted[class_key] = std::move(f);
  }
  return fitted;
}

FittedSpecs fit_spec(const data::PredictionTable& preds,
                     const data::GroundTruth& truth) {
  return fit_spec(data::pools_from_predictions(preds), truth);
}

FittedSpecs fit_spec(const data::AnnotationTable& table,
                     const data::GroundTruth& truth) {
  return fit_spec(data::pools_from_perspective(table), truth);
}

annotator::AnnotatorSpec to_annotator_spec(const FittedSpec& fitted) {
  annotator::AnnotatorSpec a;
  a.mu_w = fitted.mu_hat;
  a.var_eps = std::max(0.0, fitted.v_hat);
  double g = fitted.gamma_hat.value_or(0.0);
  a.gamma = std::clamp(g, 0.0, std::nextafter(1.0, 0.0));
  return a;
}

}  // namespace panelkit::bootstrap

#include "panelkit/dpt.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "panelkit/errors.hpp"
#include "panelkit/rng.hpp"
#include "panelkit/stats.hpp"

namespace panelkit::dpt {

namespace {

bool is_constant(std::span<const double> xs) {
  for (double x : xs)
    if (x != xs.front()) return false;
  return true;
}

// correlation of two already-screened (non-constant, equal-length) series
double pearson_raw(std::span<const double> xs, std::span<const double> ys) {
  double mx = stats::mean(xs);
  double my = stats::mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  double denom = sxx * syy;
  if (!(denom > 0.0))
    throw UndefinedStatError("correlation undefined: a series degenerated "
                             "to a single value");
  return std::clamp(sxy / std::sqrt(denom), -1.0, 1.0);
}

}  // namespace

void DifferentialSeries::validate() const {
  if (delta_star.size() != item_ids.size() ||
      delta_hat.size() != item_ids.size())
    throw ValidationError("differential series arrays have mismatched "
                          "lengths");
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    if (!(delta_star[i] >= -1.0 && delta_star[i] <= 1.0) ||
        !(delta_hat[i] >= -1.0 && delta_hat[i] <= 1.0))
      throw ValidationError("differential outside [-1, 1] at item '" +
                            item_ids[i] + "'");
  }
}

DifferentialSeries differentials(const data::GroundTruth& truth,
                                 const EstimatorMeans& est_means,
                                 const std::string& g1,
                                 const std::string& g2) {
  for (const auto& [key, v] : est_means)
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("estimator mean outside [0, 1] for (item='" +
                            key.item_id + "', group='" + key.group_id + "')");

  DifferentialSeries series;
  series.g1 = g1;
  series.g2 = g2;
  for (const auto& [key, t1] : truth) {
    if (key.group_id != g1) continue;
    auto t2 = truth.find(data::Key{key.item_id, g2});
    if (t2 == truth.end()) continue;
    auto e1 = est_means.find(data::Key{key.item_id, g1});
    auto e2 = est_means.find(data::Key{key.item_id, g2});
    if (e1 == est_means.end() || e2 == est_means.end()) continue;
    series.item_ids.push_back(key.item_id);
    series.delta_star.push_back(t1.f_star - t2->second.f_star);
    series.delta_hat.push_back(e1->second - e2->second);
  }
  if (series.item_ids.empty())
    throw ValidationError("no items shared by groups '" + g1 + "' and '" +
                          g2 + "' across ground truth (" +
                          std::to_string(truth.size()) +
                          " entries) and estimator means (" +
                          std::to_string(est_means.size()) + " entries)");
  series.validate();
  return series;
}

double pearson(const DifferentialSeries& series) {
  series.validate();
  if (series.n_items() < 3)
    throw ValidationError("correlation needs at least 3 items, got " +
                          std::to_string(series.n_items()));
  if (is_constant(series.delta_star) || is_constant(series.delta_hat))
    throw UndefinedStatError("correlation undefined: constant series for "
                             "groups '" + series.g1 + "' vs '" + series.g2 +
                             "'");
  return pearson_raw(series.delta_star, series.delta_hat);
}

double directional_accuracy(const DifferentialSeries& series,
                            double zero_tol) {
  series.validate();
  if (series.item_ids.empty())
    throw ValidationError("directional accuracy of an empty series");
  if (zero_tol < 0.0)
    throw ValidationError("zero tolerance must be non-negative");
  auto sign = [zero_tol](double v) {
    if (std::abs(v) <= zero_tol) return 0;
    return v > 0.0 ? 1 : -1;
  };
  std::size_t matches = 0;
  for (std::size_t i = 0; i < series.item_ids.size(); ++i)
    if (sign(series.delta_star[i]) == sign(series.delta_hat[i])) ++matches;
  return static_cast<double>(matches) /
         static_cast<double>(series.item_ids.size());
}

BootstrapCi bootstrap_ci(const DifferentialSeries& series, std::uint64_t B,
                         std::uint64_t seed) {
  if (B < 1) throw ValidationError("resample count B must be at least 1");
  double rho = pearson(series);  // also validates size and constancy

  const std::size_t n = series.n_items();
  constexpr std::uint64_t kMaxAttempts = 1000;
  BootstrapCi ci;
  std::vector<double> rhos;
  rhos.reserve(B);
  std::vector<double> xs(n), ys(n);
  for (std::uint64_t b = 0; b < B; ++b) {
    bool done = false;
    for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
      auto stream = rng::SubstreamKey{}
                        .with("dpt-ci")
                        .with(b)
                        .with(attempt)
                        .stream(seed);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = stream.below(n);
        xs[i] = series.delta_star[j];
        ys[i] = series.delta_hat[j];
      }
      if (is_constant(xs) || is_constant(ys)) {
        ++ci.n_redrawn;
        continue;
      }
      rhos.push_back(pearson_raw(xs, ys));
      done = true;
      break;
    }
    if (!done)
      throw Error("no non-constant resample after " +
                  std::to_string(kMaxAttempts) + " attempts");
  }
  ci.low = stats::quantile(rhos, 0.025);
  ci.high = stats::quantile(rhos, 0.975);
  // percentile intervals can in principle exclude the estimate; never let
  // a reported interval contradict the reported point value
  ci.low = std::min(ci.low, rho);
  ci.high = std::max(ci.high, rho);
  return ci;
}

FisherResult fisher_z_test(double rho1, std::size_t n1, double rho2,
                           std::size_t n2, Sided sided) {
  if (n1 < 4 || n2 < 4)
    throw ValidationError("z comparison needs at least 4 items per series");
  if (!(std::abs(rho1) < 1.0) || !(std::abs(rho2) < 1.0))
    throw ValidationError("z comparison needs |rho| < 1");
  double z1 = std::atanh(rho1);
  double z2 = std::atanh(rho2);
  double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) +
                        1.0 / static_cast<double>(n2 - 3));
  FisherResult r;
  r.z_stat = (z1 - z2) / se;
  r.p_value = sided == Sided::two_sided
                  ? 2.0 * stats::norm_cdf(-std::abs(r.z_stat))
                  : stats::norm_cdf(-r.z_stat);
  return r;
}

DptReport analyze(const DifferentialSeries& series, std::uint64_t B,
                  std::uint64_t seed, double zero_tol) {
  DptReport report;
  report.g1 = series.g1;
  report.g2 = series.g2;
  report.n_items = series.n_items();
  report.rho = pearson(series);
  auto ci = bootstrap_ci(series, B, seed);
  report.ci_low = ci.low;
  report.ci_high = ci.high;
  report.ci_redrawn = ci.n_redrawn;
  report.directional_accuracy = directional_accuracy(series, zero_tol);
  report.sigma_delta_star = std::sqrt(stats::variance(series.delta_star));
  report.B = B;
  report.seed = seed;
  report.zero_tol = zero_tol;
  return report;
}

}  // namespace panelkit::dpt

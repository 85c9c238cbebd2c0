#include "panelkit/analytics.hpp"

#include <cmath>
#include <string>

#include "detail_sum.hpp"
#include "panelkit/errors.hpp"

namespace panelkit::analytics {

namespace {

constexpr double kTieMargin = 1e-12;

// Shared subexpressions: error_floor must equal bias_sq + correlation_floor
// bitwise, so both paths go through these two helpers.
double bias_sq_of(const AnnotatorSpec& a) {
  double mu = annotator::total_bias(a);
  return mu * mu;
}

double correlation_floor_of(const AnnotatorSpec& a) {
  return a.gamma * annotator::total_variance(a);
}

DecisionReport decide(double llm_mse, double human_mse) {
  DecisionReport r;
  r.llm_mse = llm_mse;
  r.human_mse = human_mse;
  r.margin = human_mse - llm_mse;
  if (std::abs(r.margin) <= kTieMargin) {
    r.winner = Winner::tie;
  } else {
    r.winner = r.margin > 0.0 ? Winner::llm : Winner::human;
  }
  return r;
}

double mse_at(const AnnotatorSpec& a, Budget b) {
  return b.is_infinite() ? error_floor(a) : analytic_mse(a, b.k()).total;
}

}  // namespace

MseBreakdown analytic_mse(const AnnotatorSpec& a, std::uint64_t k) {
  annotator::validate(a);
  if (k < 1) throw ValidationError("budget k must be at least 1");

  MseBreakdown r;
  r.bias_sq = bias_sq_of(a);
  r.correlation_floor = correlation_floor_of(a);
  r.reducible_variance = ((1.0 - a.gamma) * annotator::total_variance(a)) /
                         static_cast<double>(k);
  r.total = (r.bias_sq + r.correlation_floor) + r.reducible_variance;
  return r;
}

double error_floor(const AnnotatorSpec& a) {
  annotator::validate(a);
  return bias_sq_of(a) + correlation_floor_of(a);
}

CouplingReport coupling(const AnnotatorSpec& a) {
  annotator::validate(a);
  CouplingReport r;
  r.i_mean = 2.0 * a.mu_w * a.mu_c;
  r.i_var = 2.0 * a.cov_wc;
  r.superadditive_mean = r.i_mean > 0.0;
  r.superadditive_var = r.i_var > 0.0;
  return r;
}

ExpandedFloor expanded_floor(const AnnotatorSpec& a) {
  annotator::validate(a);
  using detail::Dd;

  Dd base = detail::dd_add(detail::two_prod(a.mu_w, a.mu_w),
                           detail::two_prod(a.mu_c, a.mu_c));
  Dd i_mean = detail::dd_scale2(detail::two_prod(a.mu_w, a.mu_c));
  Dd marg_sum = detail::dd_add(detail::two_sum(a.var_w, a.var_c), a.var_eps);
  Dd marginals = detail::dd_mul(marg_sum, a.gamma);
  Dd var_coupling = detail::two_prod(a.gamma, 2.0 * a.cov_wc);

  ExpandedFloor r;
  r.base_magnitudes = detail::dd_value(base);
  r.systematic_coupling = detail::dd_value(i_mean);
  r.floor_marginals = detail::dd_value(marginals);
  r.variance_coupling = detail::dd_value(var_coupling);
  r.total = detail::dd_value(detail::dd_add(
      detail::dd_add(detail::dd_add(base, i_mean), marginals), var_coupling));
  return r;
}

Budget Budget::finite(std::uint64_t k) {
  if (k < 1) throw ValidationError("budget k must be at least 1");
  return Budget(k);
}

std::uint64_t Budget::k() const {
  if (!k_) throw ValidationError("infinite budget has no finite k");
  return *k_;
}

DecisionReport superiority(const AnnotatorSpec& a_llm,
                           const AnnotatorSpec& a_human, Budget m, Budget n) {
  if (m.is_infinite() != n.is_infinite())
    throw ValidationError(
        "budgets must be both finite or both infinite for a fair "
        "comparison");
  return decide(mse_at(a_llm, m), mse_at(a_human, n));
}

std::optional<std::uint64_t> budget_crossover(const AnnotatorSpec& a_llm,
                                              const AnnotatorSpec& a_human,
                                              std::uint64_t m) {
  double llm = analytic_mse(a_llm, m).total;
  if (analytic_mse(a_human, 1).total < llm) return 1;
  if (error_floor(a_human) >= llm) return std::nullopt;

  // The human curve is floor + (1-gamma)V/n, strictly decreasing toward the
  // floor, so the closed form gives the crossover up to rounding; the scan
  // around it settles the exact integer.
  double gap = llm - error_floor(a_human);
  double red = (1.0 - a_human.gamma) * annotator::total_variance(a_human);
  double guess = std::ceil(red / gap);
  if (!(guess >= 1.0)) guess = 1.0;
  if (guess >= 9.0e18) guess = 9.0e18;  // keep the cast in range
  auto n = static_cast<std::uint64_t>(guess);
  while (n > 1 && analytic_mse(a_human, n - 1).total < llm) --n;
  while (!(analytic_mse(a_human, n).total < llm)) ++n;
  return n;
}

DecisionReport single_direct_vs_llm(double v_population_spread,
                                    const AnnotatorSpec& a_llm) {
  if (!(v_population_spread >= 0.0))
    throw ValidationError("population spread must be non-negative");
  annotator::validate(a_llm);
  double llm = bias_sq_of(a_llm) + annotator::total_variance(a_llm);
  return decide(llm, v_population_spread);
}

}  // namespace panelkit::analytics

#pragma once

#include <cstdint>
#include <optional>

#include "panelkit/annotator.hpp"

namespace panelkit::analytics {

using annotator::AnnotatorSpec;

// MSE of a k-wise aggregated estimator, split into the three closed-form
// parts: squared total bias, the correlated-variance share gamma*V that no
// budget removes, and the (1-gamma)V/k share that aggregation does remove.
struct MseBreakdown {
  double bias_sq = 0.0;
  double correlation_floor = 0.0;
  double reducible_variance = 0.0;
  double total = 0.0;  // always the exact sum of the three fields
};

MseBreakdown analytic_mse(const AnnotatorSpec& a, std::uint64_t k);

// Limit of analytic_mse as k grows: mu^2 + gamma*V.
double error_floor(const AnnotatorSpec& a);

// Interaction terms between the two bias sources. Same-sign means make the
// squared bias super-additive; positive covariance does the same to the
// correlated variance inside the floor.
struct CouplingReport {
  double i_mean = 0.0;  // 2 mu_w mu_c
  double i_var = 0.0;   // 2 cov_wc
  bool superadditive_mean = false;
  bool superadditive_var = false;
};

CouplingReport coupling(const AnnotatorSpec& a);

// The floor rewritten against the raw spec fields:
// total = mu_w^2 + mu_c^2 + i_mean + gamma (var_w + var_c + var_eps + i_var).
// Must equal error_floor; computed with error-free transforms so the
// agreement holds to ~1e-15 relative for any valid spec.
struct ExpandedFloor {
  double base_magnitudes = 0.0;     // mu_w^2 + mu_c^2
  double systematic_coupling = 0.0; // i_mean
  double floor_marginals = 0.0;     // gamma (var_w + var_c + var_eps)
  double variance_coupling = 0.0;   // gamma * i_var
  double total = 0.0;
};

ExpandedFloor expanded_floor(const AnnotatorSpec& a);

// Annotation budget: a finite count, or unbounded for floor comparisons.
// Asymptotic comparisons use the floors directly instead of a huge k.
class Budget {
 public:
  static Budget finite(std::uint64_t k);
  static Budget infinite() { return Budget(std::nullopt); }

  bool is_infinite() const { return !k_.has_value(); }
  std::uint64_t k() const;

 private:
  explicit Budget(std::optional<std::uint64_t> k) : k_(k) {}
  std::optional<std::uint64_t> k_;
};

enum class Winner { llm, human, tie };

struct DecisionReport {
  Winner winner = Winner::tie;
  double llm_mse = 0.0;
  double human_mse = 0.0;
  double margin = 0.0;  // human_mse - llm_mse; positive favors the LLM side
};

// Compares the two estimator classes at budgets (m, n). Budgets are both
// finite or both infinite; ties are declared within 1e-12 absolute.
DecisionReport superiority(const AnnotatorSpec& a_llm,
                           const AnnotatorSpec& a_human, Budget m, Budget n);

// Smallest human budget n whose analytic MSE drops strictly below the LLM's
// at fixed LLM budget m; empty when the human floor never gets there.
std::optional<std::uint64_t> budget_crossover(const AnnotatorSpec& a_llm,
                                              const AnnotatorSpec& a_human,
                                              std::uint64_t m);

// One direct label from the group has MSE equal to the population spread;
// the LLM side wins iff mu^2 + V < spread.
DecisionReport single_direct_vs_llm(double v_population_spread,
                                    const AnnotatorSpec& a_llm);

}  // namespace panelkit::analytics

#pragma once

#include <cstddef>
#include <vector>

#include "panelkit/rng.hpp"

namespace panelkit::mixture {

// A group's latent judgment structure: subcommunities with population
// weights w_c and per-community mean judgments f_star_c. The group-level
// target is the weighted mean of the community means.
enum class LabelModel { deterministic, bernoulli };

struct Community {
  double weight = 0.0;  // w_c, population share
  double mean = 0.0;    // f_star_c in [0,1]
};

struct MixtureSpec {
  std::vector<Community> communities;
  LabelModel label_model = LabelModel::bernoulli;
};

// An estimator's internal belief about the community weights (q_c). Must be
// aligned index-by-index with the MixtureSpec it is compared against.
struct InternalMixture {
  std::vector<double> weights;
};

// Weights must sum to 1 within 1e-12 (never silently renormalized),
// be non-negative, and community means must lie in [0,1].
void validate(const MixtureSpec& m);

// Adds the support condition: q_c > 0 requires w_c > 0.
void validate(const MixtureSpec& m, const InternalMixture& q);

// f* = sum w_c f_star_c
double target_mean(const MixtureSpec& m);

// Between-community variance of the mean judgment:
// sum w_c (f_star_c - f*)^2.
double v_hetero(const MixtureSpec& m);

// Variance of a single direct label. Under the bernoulli label model this
// is v_hetero plus the within-community label variance
// sum w_c f_star_c (1 - f_star_c); under the deterministic model the two
// spread notions coincide. Both are reported because a single direct
// label's MSE equals this total spread, not v_hetero alone.
double population_spread(const MixtureSpec& m);

// Mean misrepresentation error sum (q_c - w_c) f_star_c. The centered form
// sum (q_c - w_c)(f_star_c - f*) is algebraically identical because the
// weight differences sum to zero; both are exposed for cross-checking.
double repr_bias(const MixtureSpec& m, const InternalMixture& q);
double repr_bias_centered(const MixtureSpec& m, const InternalMixture& q);

// chi2(q || w) = sum (q_c - w_c)^2 / w_c over communities with w_c > 0.
// Zero-weight communities are dropped after the support check, so no 0/0.
double chi2_divergence(const InternalMixture& q, const MixtureSpec& w);

// repr_bias^2 <= v_hetero * chi2, by Cauchy-Schwarz. Equality holds exactly
// when (q_c - w_c) is proportional to w_c (f_star_c - f*).
struct BoundCheck {
  double lhs = 0.0;    // repr_bias^2
  double rhs = 0.0;    // v_hetero * chi2
  bool holds = false;  // lhs <= rhs + 1e-12
  double slack = 0.0;  // rhs - lhs
};

BoundCheck check_repr_bound(const MixtureSpec& m, const InternalMixture& q);

// Draws n direct labels: community c with probability w_c, then a 0/1 label
// per the label model. The deterministic model requires binary community
// means.
std::vector<int> sample_direct_labels(const MixtureSpec& m, std::size_t n,
                                      rng::Stream& stream);

}  // namespace panelkit::mixture

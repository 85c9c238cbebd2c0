#include "panelkit/mixture.hpp"

#include <cmath>
#include <string>

#include "panelkit/errors.hpp"

namespace panelkit::mixture {

namespace {

constexpr double kWeightSumTolerance = 1e-12;

}  // namespace

void validate(const MixtureSpec& m) {
  if (m.communities.empty())
    throw ValidationError("mixture needs at least one community");
  double sum = 0.0;
  for (const auto& c : m.communities) {
    if (!(c.weight >= 0.0))
      throw ValidationError("community weight must be non-negative");
    if (!(c.mean >= 0.0 && c.mean <= 1.0))
      throw ValidationError("community mean must lie in [0,1]");
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance)
    throw ValidationError("community weights sum to " + std::to_string(sum) +
                          ", expected 1 within 1e-12");
}

void validate(const MixtureSpec& m, const InternalMixture& q) {
  validate(m);
  if (q.weights.size() != m.communities.size())
    throw ValidationError("internal mixture has " +
                          std::to_string(q.weights.size()) +
                          " weights for " +
                          std::to_string(m.communities.size()) +
                          " communities");
  double sum = 0.0;
  for (std::size_t c = 0; c < q.weights.size(); ++c) {
    if (!(q.weights[c] >= 0.0))
      throw ValidationError("internal weight must be non-negative");
    if (q.weights[c] > 0.0 && m.communities[c].weight == 0.0)
      throw UnboundedDivergenceError(
          "internal mixture puts weight " + std::to_string(q.weights[c]) +
          " on community " + std::to_string(c) +
          " with zero population weight; chi-squared divergence is "
          "unbounded");
    sum += q.weights[c];
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance)
    throw ValidationError("internal weights sum to " + std::to_string(sum) +
                          ", expected 1 within 1e-12");
}

double target_mean(const MixtureSpec& m) {
  validate(m);
  double f = 0.0;
  for (const auto& c : m.communities) f += c.weight * c.mean;
  return f;
}

double v_hetero(const MixtureSpec& m) {
  double f = target_mean(m);
  double v = 0.0;
  for (const auto& c : m.communities)
    v += c.weight * (c.mean - f) * (c.mean - f);
  return v;
}

double population_spread(const MixtureSpec& m) {
  double v = v_hetero(m);
  if (m.label_model == LabelModel::bernoulli) {
    for (const auto& c : m.communities)
      v += c.weight * c.mean * (1.0 - c.mean);
  }
  return v;
}

double repr_bias(const MixtureSpec& m, const InternalMixture& q) {
  validate(m, q);
  double b = 0.0;
  for (std::size_t c = 0; c < q.weights.size(); ++c)
    b += (q.weights[c] - m.communities[c].weight) * m.communities[c].mean;
  return b;
}

double repr_bias_centered(const MixtureSpec& m, const InternalMixture& q) {
  validate(m, q);
  double f = target_mean(m);
  double b = 0.0;
  for (std::size_t c = 0; c < q.weights.size(); ++c)
    b += (q.weights[c] - m.communities[c].weight) *
         (m.communities[c].mean - f);
  return b;
}

double chi2_divergence(const InternalMixture& q, const MixtureSpec& w) {
  validate(w, q);
  double chi2 = 0.0;
  for (std::size_t c = 0; c < q.weights.size(); ++c) {
    double wc = w.communities[c].weight;
    if (wc == 0.0) continue;  // support check already passed, q_c is 0 here
    double d = q.weights[c] - wc;
    chi2 += d * d / wc;
  }
  return chi2;
}

BoundCheck check_repr_bound(const MixtureSpec& m, const InternalMixture& q) {
  BoundCheck r;
  double b = repr_bias(m, q);
  r.lhs = b * b;
  r.rhs = v_hetero(m) * chi2_divergence(q, m);
  r.slack = r.rhs - r.lhs;
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

std::vector<int> sample_direct_labels(const MixtureSpec& m, std::size_t n,
                                      rng::Stream& stream) {
  validate(m);
  if (m.label_model == LabelModel::deterministic) {
    for (const auto& c : m.communities) {
      if (c.mean != 0.0 && c.mean != 1.0)
        throw ValidationError(
            "deterministic label model requires binary community means");
    }
  }

  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = stream.uniform();
    double acc = 0.0;
    const Community* chosen = &m.communities.back();
    for (const auto& c : m.communities) {
      acc += c.weight;
      if (u < acc) {
        chosen = &c;
        break;
      }
    }
    if (m.label_model == LabelModel::bernoulli) {
      labels.push_back(stream.uniform() < chosen->mean ? 1 : 0);
    } else {
      labels.push_back(chosen->mean == 1.0 ? 1 : 0);
    }
  }
  return labels;
}

}  // namespace panelkit::mixture

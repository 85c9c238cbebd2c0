#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "panelkit/errors.hpp"
#include "panelkit/mixture.hpp"
#include "panelkit/rng.hpp"

using namespace panelkit;

namespace {

mixture::MixtureSpec mk(std::initializer_list<mixture::Community> cs,
                        mixture::LabelModel model =
                            mixture::LabelModel::bernoulli) {
  mixture::MixtureSpec m;
  m.communities = cs;
  m.label_model = model;
  return m;
}

}  // namespace

TEST_CASE("mixture: validation enforces weights and mean ranges") {
  CHECK_NOTHROW(mixture::validate(mk({{0.5, 0.2}, {0.5, 0.9}})));
  CHECK_THROWS_AS(mixture::validate(mk({{0.5, 0.2}, {0.4, 0.9}})),
                  ValidationError);  // weights sum to 0.9
  CHECK_THROWS_AS(mixture::validate(mk({{1.2, 0.2}, {-0.2, 0.9}})),
                  ValidationError);  // negative weight
  CHECK_THROWS_AS(mixture::validate(mk({{1.0, 1.0001}})), ValidationError);
  CHECK_THROWS_AS(mixture::validate(mixture::MixtureSpec{}), ValidationError);
}

TEST_CASE("mixture: target mean fixtures") {
  CHECK(mixture::target_mean(mk({{1.0, 0.7}})) == doctest::Approx(0.7));
  CHECK(mixture::target_mean(mk({{0.5, 0.0}, {0.5, 1.0}})) ==
        doctest::Approx(0.5));
  CHECK(mixture::target_mean(mk({{0.2, 0.1}, {0.3, 0.5}, {0.5, 0.9}})) ==
        doctest::Approx(0.62));
}

TEST_CASE("mixture: heterogeneity fixtures") {
  CHECK(mixture::v_hetero(mk({{1.0, 0.7}})) == 0.0);
  CHECK(mixture::v_hetero(mk({{0.5, 0.0}, {0.5, 1.0}})) ==
        doctest::Approx(0.25));
  // 0.2(0.1-0.62)^2 + 0.3(0.5-0.62)^2 + 0.5(0.9-0.62)^2
  CHECK(mixture::v_hetero(mk({{0.2, 0.1}, {0.3, 0.5}, {0.5, 0.9}})) ==
        doctest::Approx(0.0976).epsilon(1e-12));
}

TEST_CASE("mixture: v_hetero never exceeds the [0,1] variance cap") {
  rng::Stream s(101);
  for (int trial = 0; trial < 500; ++trial) {
    mixture::MixtureSpec m;
    const int n = 2 + static_cast<int>(s.below(4));
    double wsum = 0.0;
    for (int c = 0; c < n; ++c) {
      m.communities.push_back({0.05 + s.uniform(), s.uniform()});
      wsum += m.communities.back().weight;
    }
    for (auto& c : m.communities) c.weight /= wsum;
    const double f = mixture::target_mean(m);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(mixture::v_hetero(m) <= 0.25 + 1e-12);
  }
}

TEST_CASE("mixture: population spread adds within-community label variance") {
  const auto sym = mk({{0.5, 0.0}, {0.5, 1.0}});
  // binary community means have no within-community variance
  CHECK(mixture::population_spread(sym) == doctest::Approx(0.25));
  const auto soft = mk({{1.0, 0.5}});
  CHECK(mixture::v_hetero(soft) == 0.0);
  CHECK(mixture::population_spread(soft) == doctest::Approx(0.25));
  const auto det = mk({{1.0, 0.5}}, mixture::LabelModel::deterministic);
  CHECK(mixture::population_spread(det) == 0.0);  // spread collapses to v_hetero
}

TEST_CASE("mixture: representation bias fixtures and the centered identity") {
  const auto m = mk({{0.5, 0.8}, {0.5, 0.2}});
  const mixture::InternalMixture q{{1.0, 0.0}};
  CHECK(mixture::repr_bias(m, q) == doctest::Approx(0.3));
  CHECK(mixture::repr_bias(m, {{0.5, 0.5}}) == doctest::Approx(0.0));

  rng::Stream s(7);
  for (int trial = 0; trial < 1000; ++trial) {
    mixture::MixtureSpec mm;
    mixture::InternalMixture qq;
    const int n = 2 + static_cast<int>(s.below(4));
    double wsum = 0.0, qsum = 0.0;
    for (int c = 0; c < n; ++c) {
      mm.communities.push_back({0.05 + s.uniform(), s.uniform()});
      qq.weights.push_back(0.05 + s.uniform());
      wsum += mm.communities.back().weight;
      qsum += qq.weights.back();
    }
    for (auto& c : mm.communities) c.weight /= wsum;
    for (auto& w : qq.weights) w /= qsum;
    CHECK(std::abs(mixture::repr_bias(mm, qq) -
                   mixture::repr_bias_centered(mm, qq)) < 1e-12);
  }
}

TEST_CASE("mixture: chi-squared divergence fixtures") {
  const auto half = mk({{0.5, 0.8}, {0.5, 0.2}});
  CHECK(mixture::chi2_divergence({{0.5, 0.5}}, half) == doctest::Approx(0.0));
  CHECK(mixture::chi2_divergence({{1.0, 0.0}}, half) == doctest::Approx(1.0));
  CHECK(mixture::chi2_divergence({{0.6, 0.4}}, half) == doctest::Approx(0.04));
}

TEST_CASE("mixture: support violations raise the unbounded-divergence error") {
  const auto m = mk({{1.0, 0.5}, {0.0, 0.9}});
  const mixture::InternalMixture bad{{0.5, 0.5}};  // mass on a dead community
  CHECK_THROWS_AS(mixture::validate(m, bad), UnboundedDivergenceError);
  CHECK_THROWS_AS(mixture::chi2_divergence(bad, m), UnboundedDivergenceError);
  // zero internal mass on the dead community is fine
  CHECK_NOTHROW(mixture::validate(m, mixture::InternalMixture{{1.0, 0.0}}));
}

TEST_CASE("mixture: representation bound with the exact equality case") {
  const auto m = mk({{0.5, 0.8}, {0.5, 0.2}});
  const auto eq = mixture::check_repr_bound(m, {{1.0, 0.0}});
  CHECK(eq.lhs == doctest::Approx(0.09));
  CHECK(eq.rhs == doctest::Approx(0.09));
  CHECK(eq.holds);
  CHECK(std::abs(eq.slack) < 1e-12);

  const auto zero = mixture::check_repr_bound(m, {{0.5, 0.5}});
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.holds);
}

TEST_CASE("mixture: direct labels follow the population mixture") {
  const auto m = mk({{0.5, 0.0}, {0.5, 1.0}});
  auto stream = rng::SubstreamKey{}.with("labels").stream(5);
  const auto labels = mixture::sample_direct_labels(m, 1000000, stream);
  double sum = 0.0;
  for (int v : labels) {
    REQUIRE((v == 0 || v == 1));
    sum += v;
  }
  CHECK(sum / 1e6 == doctest::Approx(0.5).epsilon(1).scale(0.002));

  CHECK(mixture::sample_direct_labels(m, 0, stream).empty());

  const auto ones = mk({{1.0, 1.0}}, mixture::LabelModel::deterministic);
  for (int v : mixture::sample_direct_labels(ones, 50, stream)) CHECK(v == 1);

  const auto soft = mk({{1.0, 0.5}}, mixture::LabelModel::deterministic);
  CHECK_THROWS_AS(mixture::sample_direct_labels(soft, 1, stream),
                  ValidationError);
}

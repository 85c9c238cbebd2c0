#include <doctest.h>

#include <cstdint>
#include <vector>

#include "panelkit/errors.hpp"
#include "panelkit/rng.hpp"
#include "panelkit/stats.hpp"

using namespace panelkit;

TEST_CASE("stream: fixed seed reproduces the exact draw sequence") {
  rng::Stream a(42), b(42);
  for (int i = 0; i < 200; ++i) CHECK(a.bits() == b.bits());
  rng::Stream c(42), d(43);
  CHECK(c.bits() != d.bits());
}

TEST_CASE("stream: uniform lands in [0,1) with sane spread") {
  rng::Stream s(7);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("stream: below is uniform over [0,n)") {
  rng::Stream s(11);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto v = s.below(5);
    REQUIRE(v < 5);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) CHECK(c == doctest::Approx(n / 5.0).epsilon(0.05));
}

TEST_CASE("stream: normal has standard moments") {
  rng::Stream s(3);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = s.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(1).scale(0.01));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("substream: value depends only on (seed, key parts)") {
  const auto v1 =
      rng::SubstreamKey{}.with("boot").with(std::uint64_t{3}).value(9);
  const auto v2 =
      rng::SubstreamKey{}.with("boot").with(std::uint64_t{3}).value(9);
  CHECK(v1 == v2);
  CHECK(v1 != rng::SubstreamKey{}.with("boot").with(std::uint64_t{4}).value(9));
  CHECK(v1 !=
        rng::SubstreamKey{}.with("boot").with(std::uint64_t{3}).value(10));
}

TEST_CASE("substream: part boundaries matter") {
  const auto joined = rng::SubstreamKey{}.with("ab").value(1);
  const auto split = rng::SubstreamKey{}.with("a").with("b").value(1);
  CHECK(joined != split);
}

TEST_CASE("stats: mean and variances") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(stats::mean(xs) == 2.5);
  CHECK(stats::variance(xs) == doctest::Approx(1.25));
  CHECK(stats::sample_variance(xs) == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(stats::mean(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(stats::sample_variance(std::vector<double>{1.0}),
                  ValidationError);
}

TEST_CASE("stats: quantile follows the linear-interpolation rule") {
  const std::vector<double> xs{3.0, 1.0, 2.0, 4.0};
  CHECK(stats::quantile(xs, 0.0) == 1.0);
  CHECK(stats::quantile(xs, 1.0) == 4.0);
  CHECK(stats::quantile(xs, 0.5) == doctest::Approx(2.5));
  CHECK(stats::quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(stats::quantile({1.0, 2.0}, 0.25) == doctest::Approx(1.25));
  CHECK_THROWS_AS(stats::quantile({}, 0.5), ValidationError);
  CHECK_THROWS_AS(stats::quantile({1.0}, 1.5), ValidationError);
}

TEST_CASE("stats: norm_cdf reference points") {
  CHECK(stats::norm_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::norm_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(stats::norm_cdf(-1.959963984540054) ==
        doctest::Approx(0.025).epsilon(1e-9));
  CHECK(stats::norm_cdf(5.0) > 0.9999997);
}

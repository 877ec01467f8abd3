#include <doctest.h>

#include <cmath>
#include <vector>

#include "nbcall/discrete_dist.hpp"
#include "nbcall/errors.hpp"

using namespace nbcall;

TEST_CASE("construction and validation") {
  CHECK_THROWS_AS(DiscreteDist(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(DiscreteDist({0.5, -0.1, 0.6}), DomainError);
  CHECK_THROWS_AS(DiscreteDist({0.5, 0.4}), DomainError);         // mass missing, no tail
  CHECK_NOTHROW(DiscreteDist({0.5, 0.4}, TailCertificate{0.1, 0.3, 0.9, 2.7}));
  CHECK_THROWS_AS(DiscreteDist::bernoulli(1.5), DomainError);
  CHECK_THROWS_AS(DiscreteDist::geometric(1.0), DomainError);

  const auto pm = DiscreteDist::point_mass(3);
  CHECK(pm.size() == 4);
  CHECK(pm[3] == 1.0);
  CHECK(pm[10] == 0.0);
  CHECK(pm[-1] == 0.0);
  CHECK(pm.mean() == 3.0);
  CHECK(pm.variance() == 0.0);

  const auto u = DiscreteDist::uniform(4);
  CHECK(u.mean() == doctest::Approx(2.0));
  CHECK(u.variance() == doctest::Approx(2.0));
}

TEST_CASE("geometric truncation certificate") {
  for (double q : {0.05, 0.3, 0.5, 0.9}) {
    const auto g = DiscreteDist::geometric(q);
    const double p = 1.0 - q;
    REQUIRE(g.truncated());
    const auto K = g.size();
    // Exact tails beyond the table: P(X >= K) = q^K and the closed-form moments.
    const double mass = std::pow(q, static_cast<double>(K));
    const double mean_exact = q / p;
    const double second_exact = q * (1.0 + q) / (p * p);
    CHECK(g.tail().mass >= mass * (1.0 - 1e-9));
    CHECK(g.tail().mass < 1e-14);
    // Memorylessness: X 1{X >= K} has the law of (K + X') on that event.
    const double Kd = static_cast<double>(K);
    const double tail_first = mass * (Kd + mean_exact);
    const double tail_second = mass * (Kd * Kd + 2.0 * Kd * mean_exact + second_exact);
    CHECK(g.tail().first_moment >= tail_first * (1.0 - 1e-9));
    CHECK(g.tail().second_moment >= tail_second * (1.0 - 1e-9));
    CHECK(g.represented_mass() + g.tail().mass >= 1.0 - 1e-15);
    CHECK(g.mean() == doctest::Approx(mean_exact).epsilon(1e-12));
  }
}

TEST_CASE("negative binomial table") {
  const auto params = NBParams::make(4.5, 0.7);
  const auto d = DiscreteDist::negative_binomial(params);
  CHECK(d.represented_mass() + d.tail().mass == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.mean() == doctest::Approx(nb_mean_var(params).mean).epsilon(1e-12));
  CHECK(d.variance() == doctest::Approx(nb_mean_var(params).variance).epsilon(1e-11));
}

TEST_CASE("convolution") {
  const auto b = DiscreteDist::bernoulli(0.5);
  const auto s = convolve(b, b);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == doctest::Approx(0.25));
  CHECK(s[1] == doctest::Approx(0.5));
  CHECK(s[2] == doctest::Approx(0.25));
  CHECK_FALSE(s.truncated());

  SUBCASE("empty and singleton inputs") {
    CHECK(convolve_all({}).mean() == 0.0);
    const std::vector<DiscreteDist> one{DiscreteDist::bernoulli(0.3)};
    CHECK(convolve_all(one)[1] == doctest::Approx(0.3));
  }

  SUBCASE("tail certificate of a sum stays sound") {
    const std::vector<DiscreteDist> parts{DiscreteDist::geometric(0.4), DiscreteDist::geometric(0.6),
                                          DiscreteDist::geometric(0.2)};
    const auto v = convolve_all(parts);
    const double mean_exact = 0.4 / 0.6 + 0.6 / 0.4 + 0.2 / 0.8;
    CHECK(1.0 - v.represented_mass() <= v.tail().mass + 1e-15);
    CHECK(mean_exact - v.mean() <= v.tail().first_moment + 1e-15);
  }
}

TEST_CASE("NB additivity: iid geometric sums are negative binomial") {
  for (int n : {2, 5, 10}) {
    for (double p : {0.5, 0.9, 0.95}) {
      const std::vector<DiscreteDist> parts(n, DiscreteDist::geometric(1.0 - p));
      const auto v = convolve_all(parts);
      const auto params = NBParams::make(n, p);
      double worst = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        worst = std::max(worst, std::abs(v[static_cast<std::ptrdiff_t>(k)] - nb_pmf(params, static_cast<std::int64_t>(k))));
      }
      CAPTURE(n);
      CAPTURE(p);
      CHECK(worst <= 1e-12);
    }
  }
}

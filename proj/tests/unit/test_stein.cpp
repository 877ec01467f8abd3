#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "nbcall/errors.hpp"
#include "nbcall/stein.hpp"

using namespace nbcall;

TEST_CASE("stein_apply") {
  const auto params = NBParams::make(2.0, 0.5);
  const auto constant = [](std::int64_t) { return 3.0; };
  CHECK(stein_apply(params, constant, 0) == doctest::Approx(params.q * params.r * 3.0));
  CHECK(stein_apply(params, [](std::int64_t) { return 0.0; }, 5) == 0.0);
}

TEST_CASE("solution values") {
  const auto params = NBParams::make(2.0, 0.5);
  const SteinSolution g(params, 0.0);
  CHECK(g(0) == 0.0);
  // (A g)(1) = (1 - 0) - mean = -1.
  CHECK(stein_apply(params, g, 1) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(g.delta(0) == g(1));
  CHECK(delta(params, 0.0, 0) == doctest::Approx(g(1)));
  CHECK(solve(params, 0.0, 0) == 0.0);
  CHECK_THROWS_AS(g.value(-1), DomainError);

  const auto b = NBParams::make(10.0, 0.95);
  CHECK(std::abs(solve(b, 3.5, 5)) <= envelope_lemma1_value(b).value);
}

TEST_CASE("Stein equation residual on a sweep") {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> ur(1.0, 30.0), up(0.3, 0.98), uf(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    const auto params = NBParams::make(ur(eng), up(eng));
    const double mean = nb_mean_var(params).mean;
    const double z = c % 10 == 0 ? std::floor(uf(eng) * 3.0 * mean) : uf(eng) * 3.0 * mean;
    const SteinSolution g(params, z);
    const double e = g.call_expectation().value;
    for (std::int64_t k = 0; k <= 60; ++k) {
      const double kd = static_cast<double>(k);
      const double up_term = params.q * (params.r + kd) * g(k + 1);
      const double down = kd * g(k);
      const double rhs = call_payoff(kd, z) - e;
      const double scale = std::max({1.0, std::abs(rhs), std::abs(up_term), std::abs(down)});
      CHECK(std::abs(up_term - down - rhs) / scale < 1e-9);
    }
  }
}

TEST_CASE("zero-mean identity under the NB law") {
  const auto params = NBParams::make(4.0, 0.6);
  const SteinSolution g(params, 2.5);
  double sum = 0.0;
  for (std::int64_t k = 0; k < 200; ++k) sum += stein_apply(params, g, k) * nb_pmf(params, k);
  CHECK(std::abs(sum) < 1e-9);
}

TEST_CASE("near-degenerate q uses the absolute floor") {
  const auto params = NBParams::make(3.0, 1.0 - 1e-8);
  const SteinSolution g(params, 0.5);
  CHECK(std::isfinite(g(1)));
  CHECK(std::isfinite(g(40)));
}

TEST_CASE("envelope arithmetic") {
  const auto params = NBParams::make(2.0, 0.5);
  CHECK(envelope_lemma1_value(params).value == doctest::Approx(8.0));
  CHECK(envelope_lemma1_delta(params).value == doctest::Approx(14.0));
  CHECK(envelope_lemma2(params, 2.0, 5).value == doctest::Approx(7.0));
  CHECK(envelope_lemma2(params, 3.0, 2).value == doctest::Approx(44.0 / 3.0));
  CHECK(envelope_lemma2(params, 3.0, 1).value == doctest::Approx(28.0));
  CHECK(envelope_remark1(params, 2.0).value == doctest::Approx(66.0));
  CHECK(envelope_remark1(params, 1e12).value < 1e-9);

  CHECK(lemma2_branch(3.0, 5) == Lemma2Branch::AtOrAboveStrike);
  CHECK(lemma2_branch(3.0, 3) == Lemma2Branch::AtOrAboveStrike);
  CHECK(lemma2_branch(3.0, 2) == Lemma2Branch::BelowStrike);
  CHECK(lemma2_branch(3.0, 1) == Lemma2Branch::AtOne);
  // 1 < z <= 2: k = 1 < z takes the k = 1 branch, k >= 2 >= z the first.
  CHECK(lemma2_branch(1.5, 1) == Lemma2Branch::AtOne);
  CHECK(lemma2_branch(1.5, 2) == Lemma2Branch::AtOrAboveStrike);
  CHECK(to_string(Lemma2Branch::BelowStrike) == "Lemma2-2<=k<z");

  CHECK_THROWS_AS(envelope_lemma2(params, 1.0, 2), DomainError);
  CHECK_THROWS_AS(envelope_lemma2(params, 2.0, 0), DomainError);
  CHECK_THROWS_AS(envelope_remark1(params, 0.5), DomainError);

  const auto huge = NBParams::make(2000.0, 0.3);
  CHECK(envelope_lemma1_delta(huge).overflowed);
  CHECK(std::isinf(envelope_remark1(huge, 5.0).value));
}

TEST_CASE("Remark 1 dominates every Lemma 2 branch") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> ur(1.0, 30.0), up(0.3, 0.98), uz(1.0001, 80.0);
  for (int c = 0; c < 2000; ++c) {
    const auto params = NBParams::make(ur(eng), up(eng));
    const double z = uz(eng);
    const double theta = envelope_remark1(params, z).value;
    for (std::int64_t k : {1, 2, 3, 10, 100}) {
      CHECK(envelope_lemma2(params, z, k).value <= theta * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("envelope checks on a sweep") {
  std::mt19937_64 eng(17);
  std::uniform_real_distribution<double> ur(1.0, 30.0), up(0.3, 0.98), uf(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    const auto params = NBParams::make(ur(eng), up(eng));
    const double z = uf(eng) * 3.0 * nb_mean_var(params).mean;
    const SteinSolution g(params, z);
    for (std::int64_t k = 0; k <= 60; ++k) {
      for (const auto& rep : check_envelopes(g, k)) {
        CAPTURE(rep.envelope_name);
        CHECK(rep.passed());
      }
    }
  }
  // z = 0 and integer strikes are covered by the global envelopes.
  const SteinSolution g0(NBParams::make(3.0, 0.4), 0.0);
  CHECK(check_envelopes(g0, 4).size() == 2);
  const SteinSolution g3(NBParams::make(3.0, 0.4), 3.0);
  CHECK(check_envelopes(g3, 4).size() == 4);
}

TEST_CASE("appendix series inequalities") {
  const auto params = NBParams::make(2.0, 0.5);
  const auto s1 = verify_appendix_series(params, 1, 2000);
  CHECK(s1[0].applicable);
  CHECK(std::abs(s1[0].slack) < 1e-12);  // equality at k = 1
  CHECK(s1[1].slack >= -1e-10);
  CHECK_FALSE(s1[3].applicable);

  // Partial sums grow with the number of terms and stay under the closed form.
  const auto short_sum = verify_appendix_series(params, 3, 10);
  const auto long_sum = verify_appendix_series(params, 3, 1000);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(short_sum[i].partial_sum <= long_sum[i].partial_sum);
    CHECK(long_sum[i].slack >= -1e-10);
  }

  std::mt19937_64 eng(23);
  std::uniform_real_distribution<double> ur(1.0, 20.0), up(0.3, 0.97);
  std::uniform_int_distribution<std::int64_t> uk(1, 50);
  for (int c = 0; c < 500; ++c) {
    for (const auto& s : verify_appendix_series(NBParams::make(ur(eng), up(eng)), uk(eng), 1000)) {
      if (s.applicable) CHECK(s.slack >= -1e-10);
    }
  }
}

TEST_CASE("shared solution across threads") {
  const SteinSolution g(NBParams::make(5.0, 0.5), 4.5);
  std::vector<double> a(40), b(40);
  std::thread t1([&] {
    for (int k = 0; k < 40; ++k) a[k] = g(k);
  });
  std::thread t2([&] {
    for (int k = 39; k >= 0; --k) b[k] = g(k);
  });
  t1.join();
  t2.join();
  CHECK(a == b);
}

#include <doctest.h>

#include <cmath>

#include "nbcall/cdo.hpp"
#include "nbcall/errors.hpp"
#include "nbcall/oracle.hpp"

using namespace nbcall;

namespace {

Portfolio independent_10() {
  Portfolio pf;
  pf.recovery = 0.4;
  pf.default_probs = {0.02, 0.03, 0.04, 0.05, 0.05, 0.05, 0.06, 0.07, 0.08, 0.05};
  pf.tranches = {{"equity", 0.0, 0.03},
                 {"junior", 0.03, 0.07},
                 {"mezzanine", 0.07, 0.10},
                 {"senior", 0.10, 0.15},
                 {"super-senior", 0.15, 1.0}};
  return pf;
}

Portfolio chain_portfolio(std::size_t n, double p, double pij) {
  Portfolio pf;
  pf.recovery = 0.4;
  pf.default_probs.assign(n, p);
  PairwiseDependence dep;
  dep.A = Neighborhoods::chain(n, 1).A;
  dep.pairs.marginals = pf.default_probs;
  for (std::size_t i = 0; i + 1 < n; ++i) dep.pairs.set_pair(i, i + 1, pij);
  pf.dependence = dep;
  pf.tranches = {{"equity", 0.0, 0.03}, {"mezzanine", 0.03, 0.07}, {"senior", 0.07, 0.15}};
  return pf;
}

}  // namespace

TEST_CASE("strike conversion") {
  const auto pf = independent_10();
  CHECK(count_strike(pf, 0.03) == doctest::Approx(0.5));
  CHECK(count_strike(pf, 0.6) == doctest::Approx(10.0));
  // Doubling N with the loss level halved keeps the count strike fixed.
  Portfolio twice = pf;
  twice.default_probs.insert(twice.default_probs.end(), pf.default_probs.begin(), pf.default_probs.end());
  CHECK(count_strike(twice, 0.015) == doctest::Approx(count_strike(pf, 0.03)));
}

TEST_CASE("validation") {
  auto pf = independent_10();
  pf.tranches.push_back({"bad", 0.2, 0.1});
  CHECK_THROWS_AS(pf.validate(), DomainError);
  auto pr = independent_10();
  pr.recovery = 1.5;
  CHECK_THROWS_AS(pr.validate(), DomainError);
  const auto ok = independent_10();
  const auto params = match_mean(ok.expected_defaults(), 10.0);
  CHECK_THROWS_AS(tranche_expected_loss(ok, ok.tranches[0], NBParams::make(10.0, 0.5)), DomainError);
  CHECK_NOTHROW(tranche_expected_loss(ok, ok.tranches[0], params));
}

TEST_CASE("full recovery gives zero losses") {
  auto pf = independent_10();
  pf.recovery = 1.0;
  const auto params = match_mean(pf.expected_defaults(), 10.0);
  for (const auto& rep : all_tranches(pf, params)) {
    CHECK(rep.expected_loss.value == 0.0);
    CHECK(rep.expected_loss.error == 0.0);
    CHECK_FALSE(rep.notes.empty());
  }
}

TEST_CASE("zero attachment gives the scaled mean") {
  const auto pf = independent_10();
  const auto params = match_mean(pf.expected_defaults(), 10.0);
  const auto rep = tranche_expected_loss(pf, {"all", 0.0, 1.0}, params);
  CHECK(rep.detach.exact_zero);
  CHECK(rep.expected_loss.value == doctest::Approx(0.6 / 10.0 * pf.expected_defaults()).epsilon(1e-12));
}

TEST_CASE("independent portfolio: intervals contain the exact tranche loss") {
  const auto pf = independent_10();
  const auto params = match_mean(pf.expected_defaults(), 10.0);
  const auto law = portfolio_loss_distribution(pf);
  REQUIRE(law.has_value());
  const auto reports = all_tranches(pf, params);
  REQUIRE(reports.size() == 5);
  for (const auto& rep : reports) {
    const auto exact = exact_tranche_loss(pf, rep.tranche, *law);
    CAPTURE(rep.tranche.id);
    CHECK(rep.expected_loss.contains(exact.value, exact.error));
    CHECK(rep.nb_bound.bound_name == "theorem2-mean");
  }
  // 0.15 is below the maximal loss 1 - R = 0.6, so only the detachment call is exact.
  CHECK_FALSE(reports.back().attach.exact_zero);
  CHECK(reports.back().detach.exact_zero);
}

TEST_CASE("dependent chain: intervals contain the exact loss from the chain law") {
  auto pf = chain_portfolio(10, 0.05, 0.0025 + 0.01);
  const auto params = match_mean(pf.expected_defaults(), 10.0);
  const auto law = portfolio_loss_distribution(pf);
  REQUIRE(law.has_value());

  // Chain DP versus full enumeration of the common-shock table.
  const auto table = CommonShockChain::fit(pf.dependence->pairs).to_table();
  const auto enumerated = exact_sum_distribution(DependencyModel(table, Neighborhoods::chain(10, 1)));
  for (std::ptrdiff_t k = 0; k <= 10; ++k) CHECK(std::abs((*law)[k] - enumerated[k]) < 1e-13);

  for (const auto& rep : all_tranches(pf, params)) {
    const auto exact = exact_tranche_loss(pf, rep.tranche, *law);
    CAPTURE(rep.tranche.id);
    CHECK(rep.expected_loss.contains(exact.value, exact.error));
    CHECK(rep.nb_bound.bound_name == "corollary2");
  }
}

TEST_CASE("tranche loss is non-increasing in the attachment point") {
  const auto pf = independent_10();
  const auto params = match_mean(pf.expected_defaults(), 10.0);
  const auto law = *portfolio_loss_distribution(pf);
  double prev_est = 1e300, prev_exact = 1e300;
  for (int i = 0; i <= 40; ++i) {
    const double a = 0.01 * i;
    const Tranche t{"t", a, 1.0};
    const double est = tranche_expected_loss(pf, t, params).expected_loss.value;
    const double ex = exact_tranche_loss(pf, t, law).value;
    CHECK(est <= prev_est + 1e-15);
    CHECK(ex <= prev_exact + 1e-15);
    prev_est = est;
    prev_exact = ex;
  }
}

TEST_CASE("bound comparison") {
  SUBCASE("A_i = {i} dependent inputs reduce to the independent columns") {
    Portfolio pf = independent_10();
    PairwiseDependence dep;
    dep.A = Neighborhoods::independent(10).A;
    dep.pairs.marginals = pf.default_probs;
    pf.dependence = dep;
    const auto rows = compare_bounds(pf, 10.0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].nb_bound == doctest::Approx(rows[0].nb_bound).epsilon(1e-10));
    CHECK(rows[1].poisson_bound == doctest::Approx(rows[0].poisson_bound).epsilon(1e-10));
  }

  SUBCASE("large dependent chains favour the NB bound") {
    for (const auto& pf : {chain_portfolio(100, 0.05, 0.01), chain_portfolio(200, 0.03, 0.005)}) {
      const auto rows = compare_bounds(pf, 2.0);
      REQUIRE(rows.size() == 2);
      CAPTURE(pf.size());
      CHECK(rows[1].nb_bound < rows[1].poisson_bound);
    }
  }

  SUBCASE("small portfolio: report only") {
    Portfolio tiny;
    tiny.default_probs = {0.01, 0.01};
    const auto rows = compare_bounds(tiny, 2.0);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].nb_bound > 0.0);
    CHECK(rows[0].poisson_bound > 0.0);
  }
}

TEST_CASE("chain law for large portfolios") {
  const auto pf = chain_portfolio(200, 0.03, 0.005);
  const auto law = portfolio_loss_distribution(pf);
  REQUIRE(law.has_value());
  CHECK(law->mean() == doctest::Approx(pf.expected_defaults()).epsilon(1e-10));
  // Var = sum p(1-p) + 2 sum_{adjacent} (p_ij - p_i p_j).
  const double var = 200 * 0.03 * 0.97 + 2.0 * 199 * (0.005 - 0.0009);
  CHECK(law->variance() == doctest::Approx(var).epsilon(1e-9));

  // Non-adjacent dependence has no exact law here.
  Portfolio far = chain_portfolio(5, 0.1, 0.02);
  far.dependence->A = Neighborhoods::chain(5, 2).A;
  far.dependence->pairs.set_pair(0, 2, 0.03);
  CHECK_FALSE(portfolio_loss_distribution(far).has_value());
}

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "nbcall/dependency.hpp"
#include "nbcall/errors.hpp"

using namespace nbcall;

namespace {

// Random joint table over {0,1,2}^dim with strictly positive weights.
TableLaw random_table(std::size_t dim, std::uint64_t seed, int levels = 3) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  TableLaw law;
  law.dimension = dim;
  std::size_t states = 1;
  for (std::size_t i = 0; i < dim; ++i) states *= static_cast<std::size_t>(levels);
  double total = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    JointOutcome o;
    std::size_t x = s;
    for (std::size_t i = 0; i < dim; ++i) {
      o.values.push_back(static_cast<std::int32_t>(x % static_cast<std::size_t>(levels)));
      x /= static_cast<std::size_t>(levels);
    }
    o.prob = u(eng);
    total += o.prob;
    law.outcomes.push_back(o);
  }
  for (auto& o : law.outcomes) o.prob /= total;
  return law;
}

Neighborhoods full(std::size_t n) {
  IndexSet all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  return {std::vector<IndexSet>(n, all), std::vector<IndexSet>(n, all)};
}

// Second code path for the smoothing terms: for every outcome, scan the whole
// table for outcomes sharing the conditioning values and compute D directly.
struct BruteSmoothing {
  double A = 0.0, iAB = 0.0, B = 0.0, second = 0.0;
};

BruteSmoothing brute_smoothing(const TableLaw& law, const IndexSet& Ai, const IndexSet& Bi, std::size_t i) {
  auto block = [](const JointOutcome& o, const IndexSet& s) {
    long v = 0;
    for (auto j : s) v += o.values[j];
    return v;
  };
  auto total = [](const JointOutcome& o) {
    long v = 0;
    for (auto x : o.values) v += x;
    return v;
  };
  // D(V | event) where event is a predicate on outcomes.
  auto D = [&](auto&& event) {
    std::map<long, double> pmf;
    double mass = 0.0;
    for (const auto& o : law.outcomes) {
      if (event(o)) {
        pmf[total(o)] += o.prob;
        mass += o.prob;
      }
    }
    double l1 = 0.0;
    for (long k = 0; k <= 64; ++k) {
      const double a = pmf.count(k) ? pmf[k] / mass : 0.0;
      const double b = pmf.count(k - 1) ? pmf[k - 1] / mass : 0.0;
      l1 += std::abs(a - b);
    }
    return l1;
  };
  BruteSmoothing out;
  for (const auto& o : law.outcomes) {
    const double x = o.values[i];
    const double a = static_cast<double>(block(o, Ai));
    const double b = static_cast<double>(block(o, Bi));
    const double d_ab = D([&](const JointOutcome& e) { return block(e, Ai) == a && block(e, Bi) == b; });
    const double d_iab = D([&](const JointOutcome& e) {
      return e.values[i] == x && block(e, Ai) == a && block(e, Bi) == b;
    });
    const double d_b = D([&](const JointOutcome& e) { return block(e, Bi) == b; });
    out.A += o.prob * a * (2 * b - a - 1) * d_ab;
    out.iAB += o.prob * x * a * (2 * b - a - 1) * d_iab;
    out.B += o.prob * b * d_b;
    out.second += o.prob * x * (a - 1) * (2 * b - a - 2) * d_iab;
  }
  return out;
}

}  // namespace

TEST_CASE("neighborhoods") {
  const auto c = Neighborhoods::chain(5, 1);
  CHECK(c.A[0] == IndexSet{0, 1});
  CHECK(c.A[2] == IndexSet{1, 2, 3});
  CHECK(c.B[2] == IndexSet{0, 1, 2, 3, 4});
  CHECK(c.B[0] == IndexSet{0, 1, 2});
  CHECK(c.A[4] == IndexSet{3, 4});
  CHECK(Neighborhoods::independent(3).is_independent());
  CHECK_FALSE(c.is_independent());

  Neighborhoods bad{{{1}, {1}}, {{0, 1}, {1}}};
  CHECK_THROWS_AS(bad.normalize_and_validate(2), DomainError);  // 0 not in A_0
  Neighborhoods not_nested{{{0, 1}, {1}}, {{0}, {1}}};
  CHECK_THROWS_AS(not_nested.normalize_and_validate(2), DomainError);
  Neighborhoods unsorted{{{1, 0}, {1}}, {{1, 0}, {0, 1}}};
  unsorted.normalize_and_validate(2);
  CHECK(unsorted.A[0] == IndexSet{0, 1});
}

TEST_CASE("model validation") {
  const std::vector<DiscreteDist> m{DiscreteDist::bernoulli(0.2), DiscreteDist::bernoulli(0.3)};
  CHECK_THROWS_AS(DependencyModel(ProductLaw{m}, Neighborhoods::chain(2)), DomainError);

  TableLaw bad_mass{1, {{{0}, 0.5}, {{1}, 0.4}}};
  CHECK_THROWS_AS(DependencyModel(bad_mass, Neighborhoods::independent(1)), DomainError);

  PairwiseBernoulli pw{{0.2, 0.3, 0.4}, {}};
  pw.set_pair(0, 2, 0.15);  // dependent pair outside A_0 = {0, 1}
  CHECK_THROWS_AS(DependencyModel(pw, Neighborhoods::chain(3)), DomainError);
  PairwiseBernoulli too_big{{0.2, 0.3}, {}};
  too_big.set_pair(0, 1, 0.25);
  CHECK_THROWS_AS(DependencyModel(too_big, Neighborhoods::chain(2)), DomainError);

  PairwiseBernoulli ok{{0.2, 0.3}, {}};
  CHECK(ok.pair(0, 0) == 0.2);
  CHECK(ok.pair(0, 1) == doctest::Approx(0.06));
  ok.set_pair(1, 0, 0.1);
  CHECK(ok.pair(0, 1) == 0.1);
}

TEST_CASE("exact sum distribution") {
  const auto two = DependencyModel::independent({DiscreteDist::bernoulli(0.5), DiscreteDist::bernoulli(0.5)});
  const auto v = exact_sum_distribution(two);
  CHECK(v[0] == doctest::Approx(0.25));
  CHECK(v[1] == doctest::Approx(0.5));
  CHECK(v[2] == doctest::Approx(0.25));

  TableLaw one{1, {{{0}, 0.2}, {{1}, 0.5}, {{3}, 0.3}}};
  const auto w = exact_sum_distribution(DependencyModel(one, Neighborhoods::independent(1)));
  CHECK(w[0] == doctest::Approx(0.2));
  CHECK(w[2] == 0.0);
  CHECK(w[3] == doctest::Approx(0.3));

  const DependencyModel pw(PairwiseBernoulli{{0.1, 0.2}, {}}, Neighborhoods::independent(2));
  CHECK_THROWS_AS(exact_sum_distribution(pw), UnsupportedLawError);

  std::vector<DiscreteDist> many(25, DiscreteDist::bernoulli(0.5));
  CHECK_THROWS_AS(product_table(ProductLaw{many}), SizeLimitError);
}

TEST_CASE("10 iid geometric sums against Monte Carlo") {
  const auto model = DependencyModel::independent(std::vector<DiscreteDist>(10, DiscreteDist::geometric(0.05)));
  const auto exact = exact_sum_distribution(model);
  const std::size_t n = 1'000'000;
  const auto mc = sample(model, n, 2024, 4);
  for (std::size_t k = 0; k < 8; ++k) {
    const double p = exact[static_cast<std::ptrdiff_t>(k)];
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CAPTURE(k);
    CHECK(std::abs(mc.pmf[k] - p) <= 3.0 * se + 1e-12);
  }
  CHECK(std::abs(mc.mean - exact.mean()) <= 3.0 * mc.mean_std_error);
}

TEST_CASE("moments") {
  const std::vector<double> p{0.1, 0.25, 0.4};
  std::vector<DiscreteDist> bern;
  for (double x : p) bern.push_back(DiscreteDist::bernoulli(x));
  const auto indep = moments(DependencyModel::independent(bern));
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(indep.per_index[i].cross == doctest::Approx(p[i]));
    CHECK(indep.per_index[i].cross_minus == doctest::Approx(0.0));
  }

  SUBCASE("comonotone pair") {
    TableLaw law{2, {{{0, 0}, 0.5}, {{1, 1}, 0.5}}};
    Neighborhoods nb{{{0, 1}, {0, 1}}, {{0, 1}, {0, 1}}};
    const auto m = moments(DependencyModel(law, nb));
    CHECK(m.per_index[0].cross == doctest::Approx(1.0));
    CHECK(m.per_index[0].block_mean == doctest::Approx(1.0));
    CHECK(m.var_V == doctest::Approx(1.0));
  }

  SUBCASE("product law equals enumeration of its table") {
    std::vector<DiscreteDist> marg{DiscreteDist::bernoulli(0.3), DiscreteDist::uniform(2),
                                   DiscreteDist({0.5, 0.2, 0.2, 0.1})};
    const auto closed = moments(DependencyModel::independent(marg));
    const auto table = moments(DependencyModel(product_table(ProductLaw{marg}), Neighborhoods::independent(3)));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(closed.per_index[i].cross - table.per_index[i].cross) < 1e-12);
      CHECK(std::abs(closed.per_index[i].third - table.per_index[i].third) < 1e-12);
      CHECK(std::abs(closed.per_index[i].cross_minus - table.per_index[i].cross_minus) < 1e-12);
    }
    CHECK(std::abs(closed.var_V - table.var_V) < 1e-12);
  }

  SUBCASE("three-variable chain against Monte Carlo") {
    CommonShockChain chain{{0.1, 0.2}, {0.2, 0.1, 0.3}};
    const DependencyModel model(chain.to_table(), Neighborhoods::chain(3));
    const auto m = moments(model);
    const auto mc = sample(model, 1'000'000, 99, 2);
    CHECK(std::abs(mc.mean - m.mean_V) <= 3.0 * mc.mean_std_error);
  }

  SUBCASE("pairwise moments match the common-shock table") {
    PairwiseBernoulli pw{{0.1, 0.2, 0.15, 0.1}, {}};
    pw.set_pair(0, 1, 0.05);
    pw.set_pair(1, 2, 0.06);
    pw.set_pair(2, 3, 0.04);
    const auto nb = Neighborhoods::chain(4);
    const auto a = moments(DependencyModel(pw, nb));
    const auto b = moments(DependencyModel(CommonShockChain::fit(pw).to_table(), nb));
    CHECK(a.mean_V == doctest::Approx(b.mean_V).epsilon(1e-12));
    CHECK(a.var_V == doctest::Approx(b.var_V).epsilon(1e-12));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.per_index[i].cross == doctest::Approx(b.per_index[i].cross).epsilon(1e-12));
      CHECK(a.per_index[i].block_mean == doctest::Approx(b.per_index[i].block_mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("dtv_unit_shift") {
  for (double p : {0.0, 0.1, 0.5, 0.8}) {
    CHECK(dtv_unit_shift(DiscreteDist::bernoulli(p)).value == doctest::Approx((1.0 + std::abs(1.0 - 2.0 * p)) / 2.0));
  }
  for (double q : {0.1, 0.3, 0.5}) {
    const auto r = dtv_unit_shift(DiscreteDist::geometric(q));
    CHECK(r.value == doctest::Approx(1.0 - q).epsilon(1e-12));
    CHECK(r.error < 1e-13);
  }
  CHECK(dtv_unit_shift(DiscreteDist::point_mass(4)).value == 1.0);
  CHECK(dtv_unit_shift(DiscreteDist::uniform(4)).value == doctest::Approx(0.2));
}

TEST_CASE("smoothing terms") {
  SUBCASE("conditioning that fixes V is flagged") {
    TableLaw law{2, {{{0, 0}, 0.5}, {{1, 1}, 0.5}}};
    const auto s = smoothing(DependencyModel(law, full(2)));
    CHECK(s[0].degenerate);
    // E[zeta_B D] with zeta_B = V and D = 2.
    CHECK(s[0].weighted_B == doctest::Approx(2.0));
  }

  SUBCASE("random 8-variable table against brute-force conditioning") {
    const TableLaw law = random_table(8, 42, 2);
    const auto nb = Neighborhoods::chain(8, 1);
    const auto fast = smoothing(DependencyModel(law, nb));
    for (std::size_t i = 0; i < 8; ++i) {
      const auto brute = brute_smoothing(law, nb.A[i], nb.B[i], i);
      CAPTURE(i);
      CHECK(fast[i].weighted_A == doctest::Approx(brute.A).epsilon(1e-10));
      CHECK(fast[i].weighted_iAB == doctest::Approx(brute.iAB).epsilon(1e-10));
      CHECK(fast[i].weighted_B == doctest::Approx(brute.B).epsilon(1e-10));
      CHECK(fast[i].weighted_second == doctest::Approx(brute.second).epsilon(1e-10));
    }
  }

  SUBCASE("product path agrees with the table path") {
    std::vector<DiscreteDist> marg{DiscreteDist::bernoulli(0.3), DiscreteDist::uniform(2),
                                   DiscreteDist({0.5, 0.2, 0.2, 0.1}), DiscreteDist::bernoulli(0.6)};
    const auto a = smoothing(DependencyModel::independent(marg));
    const auto b = smoothing(DependencyModel(product_table(ProductLaw{marg}), Neighborhoods::independent(4)));
    for (std::size_t i = 0; i < marg.size(); ++i) {
      CHECK(a[i].weighted_A == doctest::Approx(b[i].weighted_A).epsilon(1e-12));
      CHECK(a[i].weighted_iAB == doctest::Approx(b[i].weighted_iAB).epsilon(1e-12));
      CHECK(a[i].weighted_B == doctest::Approx(b[i].weighted_B).epsilon(1e-12));
      CHECK(a[i].weighted_second == doctest::Approx(b[i].weighted_second).epsilon(1e-12));
    }
  }

  SUBCASE("pairwise laws are rejected") {
    const DependencyModel pw(PairwiseBernoulli{{0.1, 0.2}, {}}, Neighborhoods::independent(2));
    CHECK_THROWS_AS(smoothing(pw), UnsupportedLawError);
  }
}

TEST_CASE("local dependence check") {
  std::vector<DiscreteDist> marg{DiscreteDist::bernoulli(0.3), DiscreteDist::bernoulli(0.6),
                                 DiscreteDist::bernoulli(0.2)};
  CHECK(satisfies_local_dependence(
      DependencyModel(product_table(ProductLaw{marg}), Neighborhoods::independent(3))));
  TableLaw comonotone{2, {{{0, 0}, 0.5}, {{1, 1}, 0.5}}};
  CHECK_FALSE(satisfies_local_dependence(DependencyModel(comonotone, Neighborhoods::independent(2))));
  CHECK(satisfies_local_dependence(DependencyModel(comonotone, full(2))));
}

TEST_CASE("common-shock chain") {
  PairwiseBernoulli pw{{0.05, 0.08, 0.1, 0.06, 0.07}, {}};
  for (std::size_t i = 0; i + 1 < 5; ++i) pw.set_pair(i, i + 1, pw.marginals[i] * pw.marginals[i + 1] + 0.01);
  const auto chain = CommonShockChain::fit(pw);
  const TableLaw table = chain.to_table();
  const DependencyModel model(table, Neighborhoods::chain(5));
  CHECK(satisfies_local_dependence(model));

  // Marginals and all pair probabilities reproduced by the table.
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i; j < 5; ++j) {
      double pij = 0.0;
      for (const auto& o : table.outcomes) pij += o.prob * o.values[i] * o.values[j];
      CAPTURE(i);
      CAPTURE(j);
      CHECK(pij == doctest::Approx(pw.pair(i, j)).epsilon(1e-12));
    }
  }

  PairwiseBernoulli far{{0.1, 0.1, 0.1}, {}};
  far.set_pair(0, 2, 0.05);
  CHECK_THROWS_AS(CommonShockChain::fit(far), DomainError);
  PairwiseBernoulli negative{{0.1, 0.1}, {}};
  negative.set_pair(0, 1, 0.001);
  CHECK_THROWS_AS(CommonShockChain::fit(negative), DomainError);

  SUBCASE("sampling matches the exact law and is reproducible") {
    const DependencyModel pmodel(pw, Neighborhoods::chain(5));
    const auto exact = exact_sum_distribution(model);
    const std::size_t n = 1'000'000;
    const auto a = sample(pmodel, n, 5, 3);
    const auto b = sample(pmodel, n, 5, 3);
    CHECK(a.pmf == b.pmf);
    for (std::size_t k = 0; k < 4; ++k) {
      const double p = exact[static_cast<std::ptrdiff_t>(k)];
      CHECK(std::abs(a.pmf[k] - p) <= 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)) + 1e-12);
    }
    const auto t = sample(model, n, 6, 2);
    for (std::size_t k = 0; k < 4; ++k) {
      const double p = exact[static_cast<std::ptrdiff_t>(k)];
      CHECK(std::abs(t.pmf[k] - p) <= 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)) + 1e-12);
    }
  }
}

TEST_CASE("sampling basics") {
  const auto two = DependencyModel::independent({DiscreteDist::bernoulli(0.5), DiscreteDist::bernoulli(0.5)});
  const auto e = sample(two, 1'000'000, 1, 1);
  CHECK(std::abs(e.mean - 1.0) <= 3.0 * e.mean_std_error);
  CHECK_THROWS_AS(sample(two, 0, 1, 1), DomainError);
}

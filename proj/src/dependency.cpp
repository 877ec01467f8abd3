#include "nbcall/dependency.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "nbcall/errors.hpp"

namespace nbcall {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

IndexSet clipped_range(std::size_t center, std::size_t radius, std::size_t n) {
  IndexSet out;
  const std::size_t lo = center >= radius ? center - radius : 0;
  const std::size_t hi = std::min(n - 1, center + radius);
  for (std::size_t j = lo; j <= hi; ++j) out.push_back(j);
  return out;
}

bool is_subset(const IndexSet& small, const IndexSet& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

std::size_t table_dimension(const Law& law) {
  return std::visit(Overloaded{
                        [](const ProductLaw& l) { return l.marginals.size(); },
                        [](const TableLaw& l) { return l.dimension; },
                        [](const PairwiseBernoulli& l) { return l.marginals.size(); },
                    },
                    law);
}

void validate_table(const TableLaw& law) {
  if (law.outcomes.size() > kMaxJointStates) {
    throw SizeLimitError("joint table has " + std::to_string(law.outcomes.size()) +
                             " states, above the enumeration limit of 2^24",
                         kMaxJointStates);
  }
  double total = 0.0;
  for (const auto& o : law.outcomes) {
    if (o.values.size() != law.dimension) {
      throw DomainError("joint table outcome has the wrong number of coordinates");
    }
    if (!(o.prob >= 0.0) || !std::isfinite(o.prob)) {
      throw DomainError("joint table probabilities must be finite and non-negative");
    }
    for (auto v : o.values) {
      if (v < 0) throw DomainError("joint table values must be non-negative integers");
    }
    total += o.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("joint table probabilities sum to " + std::to_string(total) + ", not 1");
  }
}

void validate_pairwise(const PairwiseBernoulli& law, const Neighborhoods& nbhd) {
  for (double p : law.marginals) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("Bernoulli marginals must lie in [0,1]");
  }
  for (const auto& [key, value] : law.pairs) {
    const auto [i, j] = key;
    if (i >= law.marginals.size() || j >= law.marginals.size()) {
      throw DomainError("pair probability references an index outside J");
    }
    if (i == j) {
      if (std::abs(value - law.marginals[i]) > 1e-12) {
        throw DomainError("p_{i,i} must equal p_i");
      }
      continue;
    }
    if (!(value >= 0.0 && value <= std::min(law.marginals[i], law.marginals[j]) + 1e-15)) {
      throw DomainError("pair probability p_{" + std::to_string(i) + "," + std::to_string(j) +
                        "} must lie in [0, min(p_i, p_j)]");
    }
    const auto& Ai = nbhd.A[i];
    const bool within = std::binary_search(Ai.begin(), Ai.end(), j);
    if (!within && std::abs(value - law.marginals[i] * law.marginals[j]) > 1e-12) {
      throw DomainError("dependent pair (" + std::to_string(i) + "," + std::to_string(j) +
                        ") lies outside the neighborhood A_i");
    }
  }
}

double sum_over(const std::vector<std::int32_t>& values, const IndexSet& set) {
  double s = 0.0;
  for (auto j : set) s += values[j];
  return s;
}

// 2 d_TV(W, W+1) for an unnormalized pmf with total `mass`.
double smoothing_D(const std::vector<double>& pmf, double mass) {
  double l1 = 0.0;
  double prev = 0.0;
  for (double v : pmf) {
    l1 += std::abs(v - prev);
    prev = v;
  }
  l1 += prev;
  return l1 / mass;
}

struct ConditionalLaw {
  double prob = 0.0;
  std::vector<double> pmf;
};

using Key = std::array<std::int64_t, 3>;

}  // namespace

Neighborhoods Neighborhoods::independent(std::size_t n) {
  Neighborhoods out;
  for (std::size_t i = 0; i < n; ++i) {
    out.A.push_back({i});
    out.B.push_back({i});
  }
  return out;
}

Neighborhoods Neighborhoods::chain(std::size_t n, std::size_t radius) {
  Neighborhoods out;
  for (std::size_t i = 0; i < n; ++i) {
    out.A.push_back(clipped_range(i, radius, n));
    out.B.push_back(clipped_range(i, 2 * radius, n));
  }
  return out;
}

bool Neighborhoods::is_independent() const {
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i] != IndexSet{i} || B[i] != IndexSet{i}) return false;
  }
  return true;
}

void Neighborhoods::normalize_and_validate(std::size_t n) {
  if (A.size() != n || B.size() != n) {
    throw DomainError("neighborhoods must list A_i and B_i for each of the " + std::to_string(n) +
                      " indices");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (auto* set : {&A[i], &B[i]}) {
      std::sort(set->begin(), set->end());
      set->erase(std::unique(set->begin(), set->end()), set->end());
      if (!set->empty() && set->back() >= n) {
        throw DomainError("neighborhood of index " + std::to_string(i) + " references an index outside J");
      }
    }
    if (!std::binary_search(A[i].begin(), A[i].end(), i)) {
      throw DomainError("index " + std::to_string(i) + " must belong to its own neighborhood A_i");
    }
    if (!is_subset(A[i], B[i])) {
      throw DomainError("A_i must be a subset of B_i for index " + std::to_string(i));
    }
  }
}

double PairwiseBernoulli::pair(std::size_t i, std::size_t j) const {
  if (i == j) return marginals.at(i);
  const PairKey key = i < j ? PairKey{i, j} : PairKey{j, i};
  if (auto it = pairs.find(key); it != pairs.end()) return it->second;
  return marginals.at(i) * marginals.at(j);
}

void PairwiseBernoulli::set_pair(std::size_t i, std::size_t j, double value) {
  pairs[i < j ? PairKey{i, j} : PairKey{j, i}] = value;
}

DependencyModel::DependencyModel(Law law, Neighborhoods neighborhoods)
    : law_(std::move(law)), nbhd_(std::move(neighborhoods)), n_(table_dimension(law_)) {
  nbhd_.normalize_and_validate(n_);
  std::visit(Overloaded{
                 [&](const ProductLaw&) {
                   if (!nbhd_.is_independent()) {
                     throw DomainError("a product law requires A_i = B_i = {i}");
                   }
                 },
                 [](const TableLaw& l) { validate_table(l); },
                 [&](const PairwiseBernoulli& l) { validate_pairwise(l, nbhd_); },
             },
             law_);
}

DependencyModel DependencyModel::independent(std::vector<DiscreteDist> marginals) {
  const std::size_t n = marginals.size();
  return DependencyModel(ProductLaw{std::move(marginals)}, Neighborhoods::independent(n));
}

DiscreteDist exact_sum_distribution(const DependencyModel& model) {
  return std::visit(
      Overloaded{
          [](const ProductLaw& l) { return convolve_all(l.marginals); },
          [](const TableLaw& l) {
            std::vector<double> pmf;
            for (const auto& o : l.outcomes) {
              const auto v = static_cast<std::size_t>(std::accumulate(o.values.begin(), o.values.end(), std::int64_t{0}));
              if (pmf.size() <= v) pmf.resize(v + 1, 0.0);
              pmf[v] += o.prob;
            }
            if (pmf.empty()) pmf.push_back(1.0);
            return DiscreteDist(std::move(pmf));
          },
          [](const PairwiseBernoulli&) -> DiscreteDist {
            throw UnsupportedLawError(
                "pairwise Bernoulli inputs do not fix a joint law; fit a CommonShockChain and use its table");
          },
      },
      model.law());
}

MomentSet moments(const DependencyModel& model) {
  MomentSet out;
  out.per_index.resize(model.size());
  std::visit(
      Overloaded{
          [&](const ProductLaw& l) {
            for (std::size_t i = 0; i < l.marginals.size(); ++i) {
              const auto& d = l.marginals[i];
              auto& m = out.per_index[i];
              m.mean = d.mean();
              m.second = d.moment(2);
              m.third = d.moment(3);
              m.block_mean = m.mean;
              m.cross = m.second;
              m.cross_minus = m.second - m.mean;
              out.mean_V += m.mean;
              out.var_V += m.second - m.mean * m.mean;
            }
          },
          [&](const TableLaw& l) {
            double ev = 0.0;
            double ev2 = 0.0;
            for (const auto& o : l.outcomes) {
              double v = 0.0;
              for (auto x : o.values) v += x;
              ev += o.prob * v;
              ev2 += o.prob * v * v;
              for (std::size_t i = 0; i < model.size(); ++i) {
                const double zi = o.values[i];
                const double za = sum_over(o.values, model.A(i));
                auto& m = out.per_index[i];
                m.mean += o.prob * zi;
                m.second += o.prob * zi * zi;
                m.third += o.prob * zi * zi * zi;
                m.block_mean += o.prob * za;
                m.cross += o.prob * zi * za;
                m.cross_minus += o.prob * zi * (za - 1.0);
              }
            }
            out.mean_V = ev;
            out.var_V = ev2 - ev * ev;
          },
          [&](const PairwiseBernoulli& l) {
            for (std::size_t i = 0; i < model.size(); ++i) {
              auto& m = out.per_index[i];
              const double pi = l.marginals[i];
              m.mean = m.second = m.third = pi;
              for (auto j : model.A(i)) {
                m.block_mean += l.marginals[j];
                m.cross += l.pair(i, j);
              }
              m.cross_minus = m.cross - pi;
              out.mean_V += pi;
              out.var_V += pi * (1.0 - pi);
              for (auto j : model.A(i)) {
                if (j != i) out.var_V += l.pair(i, j) - pi * l.marginals[j];
              }
            }
          },
      },
      model.law());
  return out;
}

Certified dtv_unit_shift(const DiscreteDist& dist) {
  const auto pmf = dist.pmf();
  double l1 = 0.0;
  double prev = 0.0;
  for (double v : pmf) {
    l1 += std::abs(v - prev);
    prev = v;
  }
  l1 += prev;
  const double value = std::clamp(0.5 * l1, 0.0, 1.0);
  return {value, dist.tail().mass};
}

std::vector<SmoothingTerms> smoothing(const DependencyModel& model) {
  const std::size_t n = model.size();
  std::vector<SmoothingTerms> out(n);

  if (const auto* product = std::get_if<ProductLaw>(&model.law())) {
    const auto& marg = product->marginals;
    // Leave-one-out sums from prefix and suffix convolutions.
    std::vector<DiscreteDist> prefix{DiscreteDist::point_mass(0)};
    for (std::size_t i = 0; i < n; ++i) prefix.push_back(convolve(prefix.back(), marg[i]));
    std::vector<DiscreteDist> suffix(n + 1, DiscreteDist::point_mass(0));
    for (std::size_t i = n; i-- > 0;) suffix[i] = convolve(marg[i], suffix[i + 1]);

    for (std::size_t i = 0; i < n; ++i) {
      const Certified dtv = dtv_unit_shift(convolve(prefix[i], suffix[i + 1]));
      const double D = 2.0 * dtv.value;
      double f2 = 0.0, f3 = 0.0, g3 = 0.0;
      const auto pmf = marg[i].pmf();
      for (std::size_t k = 0; k < pmf.size(); ++k) {
        const double x = static_cast<double>(k);
        f2 += pmf[k] * x * (x - 1.0);
        f3 += pmf[k] * x * x * (x - 1.0);
        g3 += pmf[k] * x * (x - 1.0) * (x - 2.0);
      }
      const double mean = marg[i].mean();
      auto& s = out[i];
      s.weighted_A = f2 * D;
      s.weighted_iAB = f3 * D;
      s.weighted_B = mean * D;
      s.weighted_second = g3 * D;
      s.error = 2.0 * dtv.error * (std::abs(f2) + std::abs(f3) + mean + std::abs(g3));
      s.degenerate = n == 1;
    }
    return out;
  }

  const auto* table = std::get_if<TableLaw>(&model.law());
  if (table == nullptr) {
    throw UnsupportedLawError("smoothing terms need an explicit joint law (table or product)");
  }

  std::size_t max_v = 0;
  std::vector<std::size_t> sums(table->outcomes.size());
  for (std::size_t o = 0; o < sums.size(); ++o) {
    const auto& vals = table->outcomes[o].values;
    sums[o] = static_cast<std::size_t>(std::accumulate(vals.begin(), vals.end(), std::int64_t{0}));
    max_v = std::max(max_v, sums[o]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    std::map<Key, ConditionalLaw> by_AB, by_iAB, by_B;
    auto add = [&](std::map<Key, ConditionalLaw>& m, const Key& key, double prob, std::size_t v) {
      auto& c = m[key];
      if (c.pmf.empty()) c.pmf.assign(max_v + 1, 0.0);
      c.prob += prob;
      c.pmf[v] += prob;
    };
    for (std::size_t o = 0; o < sums.size(); ++o) {
      const auto& outcome = table->outcomes[o];
      if (outcome.prob == 0.0) continue;
      const auto zi = static_cast<std::int64_t>(outcome.values[i]);
      const auto za = static_cast<std::int64_t>(sum_over(outcome.values, model.A(i)));
      const auto zb = static_cast<std::int64_t>(sum_over(outcome.values, model.B(i)));
      add(by_AB, {za, zb, 0}, outcome.prob, sums[o]);
      add(by_iAB, {zi, za, zb}, outcome.prob, sums[o]);
      add(by_B, {zb, 0, 0}, outcome.prob, sums[o]);
    }

    auto& s = out[i];
    auto accumulate_terms = [&](const std::map<Key, ConditionalLaw>& m, auto weight) {
      double total = 0.0;
      for (const auto& [key, c] : m) {
        const double w = weight(key);
        if (w == 0.0) continue;
        const double D = smoothing_D(c.pmf, c.prob);
        if (D >= 2.0 - 1e-15) s.degenerate = true;
        total += c.prob * w * D;
      }
      return total;
    };
    s.weighted_A = accumulate_terms(by_AB, [](const Key& k) {
      const double a = static_cast<double>(k[0]), b = static_cast<double>(k[1]);
      return a * (2.0 * b - a - 1.0);
    });
    s.weighted_iAB = accumulate_terms(by_iAB, [](const Key& k) {
      const double x = static_cast<double>(k[0]), a = static_cast<double>(k[1]), b = static_cast<double>(k[2]);
      return x * a * (2.0 * b - a - 1.0);
    });
    s.weighted_B = accumulate_terms(by_B, [](const Key& k) { return static_cast<double>(k[0]); });
    s.weighted_second = accumulate_terms(by_iAB, [](const Key& k) {
      const double x = static_cast<double>(k[0]), a = static_cast<double>(k[1]), b = static_cast<double>(k[2]);
      return x * (a - 1.0) * (2.0 * b - a - 2.0);
    });
  }
  return out;
}

TableLaw product_table(const ProductLaw& law) {
  std::size_t states = 1;
  for (const auto& m : law.marginals) {
    if (m.truncated()) {
      throw DomainError("only finite marginals can be enumerated into a joint table");
    }
    if (states > kMaxJointStates / m.size()) {
      throw SizeLimitError("product law exceeds the enumeration limit of 2^24 joint states", kMaxJointStates);
    }
    states *= m.size();
  }
  TableLaw out;
  out.dimension = law.marginals.size();
  out.outcomes.push_back({{}, 1.0});
  for (const auto& m : law.marginals) {
    std::vector<JointOutcome> next;
    next.reserve(out.outcomes.size() * m.size());
    for (const auto& o : out.outcomes) {
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[static_cast<std::ptrdiff_t>(k)] == 0.0) continue;
        JointOutcome e = o;
        e.values.push_back(static_cast<std::int32_t>(k));
        e.prob *= m[static_cast<std::ptrdiff_t>(k)];
        next.push_back(std::move(e));
      }
    }
    out.outcomes = std::move(next);
  }
  return out;
}

bool satisfies_local_dependence(const DependencyModel& model, double tol) {
  const auto* table = std::get_if<TableLaw>(&model.law());
  if (table == nullptr) {
    return model.is_product();
  }
  const std::size_t n = model.size();

  using Tuple = std::vector<std::int32_t>;
  auto project = [](const Tuple& values, const IndexSet& set) {
    Tuple out;
    for (auto j : set) out.push_back(values[j]);
    return out;
  };
  auto complement = [n](const IndexSet& set) {
    IndexSet out;
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::binary_search(set.begin(), set.end(), j)) out.push_back(j);
    }
    return out;
  };
  auto independent = [&](const IndexSet& left, const IndexSet& right) {
    if (left.empty() || right.empty()) return true;
    std::map<Tuple, double> pl, pr;
    std::map<std::pair<Tuple, Tuple>, double> joint;
    for (const auto& o : table->outcomes) {
      auto l = project(o.values, left);
      auto r = project(o.values, right);
      pl[l] += o.prob;
      pr[r] += o.prob;
      joint[{std::move(l), std::move(r)}] += o.prob;
    }
    for (const auto& [l, a] : pl) {
      for (const auto& [r, b] : pr) {
        auto it = joint.find({l, r});
        const double pj = it == joint.end() ? 0.0 : it->second;
        if (std::abs(pj - a * b) > tol) return false;
      }
    }
    return true;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!independent({i}, complement(model.A(i)))) return false;
    if (!independent(model.A(i), complement(model.B(i)))) return false;
  }
  return true;
}

CommonShockChain CommonShockChain::fit(const PairwiseBernoulli& law) {
  const std::size_t n = law.marginals.size();
  if (n == 0) throw DomainError("common-shock construction needs at least one obligor");
  for (double p : law.marginals) {
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("common-shock construction needs marginals strictly inside (0,1)");
    }
  }
  for (const auto& [key, value] : law.pairs) {
    const auto [i, j] = key;
    if (j > i + 1 && std::abs(value - law.marginals[i] * law.marginals[j]) > 1e-12) {
      throw DomainError("common-shock construction only supports dependence between adjacent indices; pair (" +
                        std::to_string(i) + "," + std::to_string(j) + ") is dependent");
    }
  }
  CommonShockChain out;
  out.shock.resize(n - 1);
  out.idiosyncratic.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double pi = law.marginals[i];
    const double pj = law.marginals[i + 1];
    const double pij = law.pair(i, i + 1);
    if (pij < pi * pj - 1e-15) {
      throw DomainError("common-shock construction needs p_{i,i+1} >= p_i p_{i+1} at i=" + std::to_string(i));
    }
    const double both_zero = 1.0 - pi - pj + pij;
    out.shock[i] = std::max(0.0, 1.0 - (1.0 - pi) * (1.0 - pj) / both_zero);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? 1.0 - out.shock[i - 1] : 1.0;
    const double right = i + 1 < n ? 1.0 - out.shock[i] : 1.0;
    const double no_default = (1.0 - law.marginals[i]) / (left * right);
    if (no_default > 1.0 + 1e-12) {
      throw DomainError("common-shock construction infeasible at index " + std::to_string(i) +
                        ": neighbouring shocks already exceed the marginal default probability");
    }
    out.idiosyncratic[i] = std::clamp(1.0 - no_default, 0.0, 1.0);
  }
  return out;
}

TableLaw CommonShockChain::to_table() const {
  const std::size_t n = size();
  if (n > 20) {
    throw SizeLimitError("common-shock tables are enumerated for at most 20 obligors", std::size_t{1} << 20);
  }
  TableLaw out;
  out.dimension = n;
  const std::size_t states = std::size_t{1} << n;
  std::vector<std::int32_t> x(n);
  for (std::size_t mask = 0; mask < states; ++mask) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::int32_t>((mask >> i) & 1U);
    // Forward recursion over the shock S_i shared by (i, i+1); S_{-1} = S_{n-1} = 0.
    std::array<double, 2> f{1.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 2> g{0.0, 0.0};
      const bool last = i + 1 == n;
      for (int right = 0; right <= (last ? 0 : 1); ++right) {
        const double p_right = last ? 1.0 : (right ? shock[i] : 1.0 - shock[i]);
        for (int left = 0; left <= 1; ++left) {
          if (f[left] == 0.0) continue;
          const double p_zero = (left == 0 && right == 0) ? 1.0 - idiosyncratic[i] : 0.0;
          const double p_x = x[i] == 0 ? p_zero : 1.0 - p_zero;
          g[right] += f[left] * p_right * p_x;
        }
      }
      f = g;
    }
    const double prob = f[0] + f[1];
    if (prob > 0.0) out.outcomes.push_back({x, prob});
  }
  // Renormalize away rounding so the table passes the 1e-12 mass check.
  double total = 0.0;
  for (const auto& o : out.outcomes) total += o.prob;
  for (auto& o : out.outcomes) o.prob /= total;
  return out;
}

EmpiricalDist sample(const DependencyModel& model, std::size_t n_paths, std::uint64_t seed,
                     std::size_t workers) {
  if (n_paths == 0) throw DomainError("sampling needs at least one path");
  workers = std::max<std::size_t>(1, workers);

  // Each draw function maps a generator to one realisation of V.
  using Engine = std::mt19937_64;
  std::function<std::size_t(Engine&)> draw;

  std::vector<std::vector<double>> cdfs;
  std::vector<double> table_cdf;
  std::vector<std::size_t> table_sums;
  std::optional<CommonShockChain> chain;

  auto make_cdf = [](std::span<const double> pmf) {
    std::vector<double> cdf(pmf.size());
    std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
    return cdf;
  };
  auto invert = [](const std::vector<double>& cdf, double u) {
    return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  std::visit(Overloaded{
                 [&](const ProductLaw& l) {
                   for (const auto& m : l.marginals) cdfs.push_back(make_cdf(m.pmf()));
                   draw = [&](Engine& eng) {
                     std::uniform_real_distribution<double> unif(0.0, 1.0);
                     std::size_t v = 0;
                     // Draws falling in a truncated tail land on the first unrepresented value.
                     for (const auto& cdf : cdfs) v += invert(cdf, unif(eng));
                     return v;
                   };
                 },
                 [&](const TableLaw& l) {
                   std::vector<double> probs;
                   for (const auto& o : l.outcomes) {
                     probs.push_back(o.prob);
                     table_sums.push_back(static_cast<std::size_t>(
                         std::accumulate(o.values.begin(), o.values.end(), std::int64_t{0})));
                   }
                   table_cdf = make_cdf(probs);
                   draw = [&](Engine& eng) {
                     std::uniform_real_distribution<double> unif(0.0, 1.0);
                     const auto idx = std::min(invert(table_cdf, unif(eng)), table_sums.size() - 1);
                     return table_sums[idx];
                   };
                 },
                 [&](const PairwiseBernoulli& l) {
                   chain = CommonShockChain::fit(l);
                   draw = [&](Engine& eng) {
                     std::uniform_real_distribution<double> unif(0.0, 1.0);
                     const std::size_t n = chain->size();
                     std::size_t v = 0;
                     bool left = false;
                     for (std::size_t i = 0; i < n; ++i) {
                       const bool right = i + 1 < n && unif(eng) < chain->shock[i];
                       const bool own = unif(eng) < chain->idiosyncratic[i];
                       v += (own || left || right) ? 1 : 0;
                       left = right;
                     }
                     return v;
                   };
                 },
             },
             model.law());

  std::vector<std::vector<std::uint64_t>> counts(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t share = n_paths / workers + (w < n_paths % workers ? 1 : 0);
    threads.emplace_back([&, w, share] {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(w)};
      Engine eng(seq);
      auto& c = counts[w];
      for (std::size_t s = 0; s < share; ++s) {
        const std::size_t v = draw(eng);
        if (c.size() <= v) c.resize(v + 1, 0);
        ++c[v];
      }
    });
  }
  for (auto& t : threads) t.join();

  std::vector<std::uint64_t> total;
  for (const auto& c : counts) {
    if (total.size() < c.size()) total.resize(c.size(), 0);
    for (std::size_t k = 0; k < c.size(); ++k) total[k] += c[k];
  }

  EmpiricalDist out;
  out.n_paths = n_paths;
  const double n = static_cast<double>(n_paths);
  double m2 = 0.0;
  for (std::size_t k = 0; k < total.size(); ++k) {
    const double p = static_cast<double>(total[k]) / n;
    out.pmf.push_back(p);
    out.std_error.push_back(std::sqrt(p * (1.0 - p) / n));
    out.mean += static_cast<double>(k) * p;
    m2 += static_cast<double>(k) * static_cast<double>(k) * p;
  }
  out.mean_std_error = std::sqrt(std::max(0.0, m2 - out.mean * out.mean) / n);
  return out;
}

}  // namespace nbcall

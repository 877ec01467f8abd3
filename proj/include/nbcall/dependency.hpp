#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "nbcall/discrete_dist.hpp"
#include "nbcall/certified.hpp"

namespace nbcall {

/// Sorted set of 0-based indices.
using IndexSet = std::vector<std::size_t>;

/// Neighborhoods i in A_i subset B_i subset J = {0, ..., n-1}: zeta_i is
/// independent of the variables outside A_i, and zeta_{A_i} of those outside B_i.
struct Neighborhoods {
  std::vector<IndexSet> A;
  std::vector<IndexSet> B;

  /// A_i = B_i = {i}.
  static Neighborhoods independent(std::size_t n);
  /// A_i = {i-radius, ..., i+radius} and B_i = {i-2 radius, ..., i+2 radius},
  /// clipped to J at both ends.
  static Neighborhoods chain(std::size_t n, std::size_t radius = 1);

  std::size_t size() const noexcept { return A.size(); }
  bool is_independent() const;
  /// Sorts each set and throws DomainError unless i in A_i subset B_i subset J.
  void normalize_and_validate(std::size_t n);
};

/// Independent coordinates with the given marginals.
struct ProductLaw {
  std::vector<DiscreteDist> marginals;
};

struct JointOutcome {
  std::vector<std::int32_t> values;
  double prob = 0.0;
};

/// Explicit joint table over a finite support.
struct TableLaw {
  std::size_t dimension = 0;
  std::vector<JointOutcome> outcomes;
};

using PairKey = std::pair<std::size_t, std::size_t>;

/// Bernoulli marginals with pair probabilities P(zeta_i = 1, zeta_j = 1).
/// Pairs are stored with i < j; pairs not listed are treated as independent.
struct PairwiseBernoulli {
  std::vector<double> marginals;
  std::map<PairKey, double> pairs;

  /// p_{i,j}, with p_{i,i} = p_i and p_i p_j for unlisted pairs.
  double pair(std::size_t i, std::size_t j) const;
  void set_pair(std::size_t i, std::size_t j, double value);
};

using Law = std::variant<ProductLaw, TableLaw, PairwiseBernoulli>;

inline constexpr std::size_t kMaxJointStates = std::size_t{1} << 24;

class DependencyModel {
 public:
  DependencyModel(Law law, Neighborhoods neighborhoods);

  static DependencyModel independent(std::vector<DiscreteDist> marginals);

  std::size_t size() const noexcept { return n_; }
  const Law& law() const noexcept { return law_; }
  const Neighborhoods& neighborhoods() const noexcept { return nbhd_; }
  const IndexSet& A(std::size_t i) const { return nbhd_.A.at(i); }
  const IndexSet& B(std::size_t i) const { return nbhd_.B.at(i); }

  bool is_product() const noexcept { return std::holds_alternative<ProductLaw>(law_); }
  bool is_table() const noexcept { return std::holds_alternative<TableLaw>(law_); }
  bool is_pairwise() const noexcept { return std::holds_alternative<PairwiseBernoulli>(law_); }

 private:
  Law law_;
  Neighborhoods nbhd_;
  std::size_t n_ = 0;
};

/// Per-index expectations consumed by the locally dependent bounds.
struct IndexMoments {
  double mean = 0.0;         // E(zeta_i)
  double second = 0.0;       // E(zeta_i^2)
  double third = 0.0;        // E(zeta_i^3)
  double block_mean = 0.0;   // E(zeta_{A_i})
  double cross = 0.0;        // E(zeta_i zeta_{A_i})
  double cross_minus = 0.0;  // E(zeta_i (zeta_{A_i} - 1))
};

struct MomentSet {
  std::vector<IndexMoments> per_index;
  double mean_V = 0.0;
  double var_V = 0.0;
};

/// Exact law of V = sum_i zeta_i: convolution for ProductLaw, enumeration for TableLaw.
DiscreteDist exact_sum_distribution(const DependencyModel& model);

MomentSet moments(const DependencyModel& model);

/// d_TV(X, X+1) = (1/2) sum_k |P(X=k) - P(X=k-1)|; `error` bounds the effect
/// of the truncated tail.
Certified dtv_unit_shift(const DiscreteDist& dist);

/// Smoothing expectations for index i, with D(W) = 2 d_TV(W, W+1) evaluated on
/// the conditional law of V:
///   weighted_A       E[zeta_A (2 zeta_B - zeta_A - 1) D(V | zeta_A, zeta_B)]
///   weighted_iAB     E[zeta_i zeta_A (2 zeta_B - zeta_A - 1) D(V | zeta_i, zeta_A, zeta_B)]
///   weighted_B       E[zeta_B D(V | zeta_B)]
///   weighted_second  E[zeta_i (zeta_A - 1)(2 zeta_B - zeta_A - 2) D(V | zeta_i, zeta_A, zeta_B)]
struct SmoothingTerms {
  double weighted_A = 0.0;
  double weighted_iAB = 0.0;
  double weighted_B = 0.0;
  double weighted_second = 0.0;
  /// Additive error from truncated marginals (ProductLaw only).
  double error = 0.0;
  /// Set when some conditioning event fixes V, making D(V | .) = 2.
  bool degenerate = false;
};

/// Smoothing terms for every index. Supports TableLaw (direct enumeration of
/// the conditional laws) and ProductLaw (D(V | zeta_i) = D(V - zeta_i)).
std::vector<SmoothingTerms> smoothing(const DependencyModel& model);

/// Enumerates a ProductLaw of finite marginals into a joint table.
TableLaw product_table(const ProductLaw& law);

/// Checks the local-dependence conditions of a TableLaw by enumeration:
/// zeta_i independent of zeta_{A_i^c} and zeta_{A_i} independent of zeta_{B_i^c}.
bool satisfies_local_dependence(const DependencyModel& model, double tol = 1e-12);

/// One-dependent common-shock construction for chain-structured pairwise
/// Bernoulli inputs: independent shocks S_i ~ Bern(s_i) shared by neighbours
/// (i, i+1) and idiosyncratic I_i ~ Bern(u_i), with
///   zeta_i = max(I_i, S_{i-1}, S_i).
/// Only adjacent pairs may carry dependence, and each needs p_{i,i+1} >= p_i p_{i+1}.
struct CommonShockChain {
  std::vector<double> shock;          // s_i for pair (i, i+1), size n-1
  std::vector<double> idiosyncratic;  // u_i, size n

  static CommonShockChain fit(const PairwiseBernoulli& law);
  std::size_t size() const noexcept { return idiosyncratic.size(); }
  /// Joint table of (zeta_0, ..., zeta_{n-1}); n <= 24.
  TableLaw to_table() const;
};

struct EmpiricalDist {
  std::vector<double> pmf;
  std::vector<double> std_error;
  double mean = 0.0;
  double mean_std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Seeded Monte Carlo law of V. Output is a function of (seed, n_paths, workers):
/// worker w draws its share of paths from a generator seeded with (seed, w).
EmpiricalDist sample(const DependencyModel& model, std::size_t n_paths, std::uint64_t seed,
                     std::size_t workers = 1);

}  // namespace nbcall

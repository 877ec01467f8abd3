#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nbcall/bounds.hpp"
#include "nbcall/certified.hpp"
#include "nbcall/dependency.hpp"
#include "nbcall/discrete_dist.hpp"
#include "nbcall/nb_core.hpp"

namespace nbcall {

/// Attachment and detachment as fractions of total notional, 0 <= a < d <= 1.
struct Tranche {
  std::string id;
  double attachment = 0.0;
  double detachment = 1.0;
};

/// Pairwise default dependence: neighborhoods A_i and joint default probabilities.
struct PairwiseDependence {
  std::vector<IndexSet> A;
  PairwiseBernoulli pairs;
};

/// N obligors with equal notional and constant recovery R. The percentage
/// portfolio loss is L = (1-R)/N * V with V the number of defaults.
struct Portfolio {
  double recovery = 0.4;
  std::vector<double> default_probs;
  std::optional<PairwiseDependence> dependence;
  std::vector<Tranche> tranches;

  std::size_t size() const noexcept { return default_probs.size(); }
  double expected_defaults() const;
  /// Throws DomainError on invalid probabilities, recovery or tranche points.
  void validate() const;
};

/// Count-space strike N a / (1-R) for a loss level a.
double count_strike(const Portfolio& portfolio, double loss_level);

/// NB error bound for the portfolio: pairwise-indicator form for dependent inputs,
/// the independent-sum form otherwise. Mean matched with the given r.
BoundReport portfolio_bound(const Portfolio& portfolio, double r);
/// The Poisson comparison bound for the same setup.
double portfolio_poisson_bound(const Portfolio& portfolio);

struct StrikeEstimate {
  double loss_level = 0.0;  // a or d
  double strike = 0.0;      // count-space z
  /// E[(V - z)^+] approximated by the NB call; error = bound + NB series tail.
  Certified call;
  bool exact_zero = false;  // z >= N, so the call is exactly 0
  std::string bound_used;   // "uniform" or "non-uniform"
};

struct TrancheReport {
  Tranche tranche;
  StrikeEstimate attach;
  StrikeEstimate detach;
  /// Expected tranche loss as a fraction of total notional:
  ///   (1-R)/N (E[(V - z_a)^+] - E[(V - z_d)^+]).
  Certified expected_loss;
  BoundReport nb_bound;
  double poisson_bound = 0.0;
  std::vector<std::string> notes;
  /// Exact value when a full joint law is available (see portfolio_loss_distribution).
  std::optional<Certified> oracle;
};

/// NB estimate of the tranche's expected loss with its certificate. `params`
/// must be mean matched to the expected number of defaults.
TrancheReport tranche_expected_loss(const Portfolio& portfolio, const Tranche& tranche, const NBParams& params);

std::vector<TrancheReport> all_tranches(const Portfolio& portfolio, const NBParams& params);

/// Exact law of the number of defaults when one is available: independent
/// portfolios always; dependent ones through the common-shock chain when the
/// pairs are adjacent-only (a forward pass over obligors, no size limit).
std::optional<DiscreteDist> portfolio_loss_distribution(const Portfolio& portfolio);

/// Exact expected tranche loss from a known default-count law.
Certified exact_tranche_loss(const Portfolio& portfolio, const Tranche& tranche, const DiscreteDist& defaults);

struct BoundComparison {
  std::string setup;  // "independent" or "dependent"
  double nb_bound = 0.0;
  double poisson_bound = 0.0;
};

/// NB versus Poisson bounds; the dependent row is present when the portfolio
/// carries dependence.
std::vector<BoundComparison> compare_bounds(const Portfolio& portfolio, double r);

}  // namespace nbcall

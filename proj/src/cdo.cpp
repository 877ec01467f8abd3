#include "nbcall/cdo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbcall/errors.hpp"
#include "nbcall/oracle.hpp"
#include "nbcall/stein.hpp"

namespace nbcall {

namespace {

bool mean_matched(const NBParams& params, double mu) {
  return std::abs(params.r * params.q / params.p - mu) <= 1e-9 * std::max(1.0, mu);
}

// Law of the default count under the common-shock chain, by a forward pass
// over obligors carrying (defaults so far, whether the shock shared with the
// next obligor fired).
DiscreteDist chain_count_distribution(const CommonShockChain& chain) {
  const std::size_t n = chain.size();
  // state[s][v]: s = left shock fired
  std::vector<std::vector<double>> state(2, std::vector<double>(n + 1, 0.0));
  state[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::vector<double>> next(2, std::vector<double>(n + 1, 0.0));
    const double s = i + 1 < n ? chain.shock[i] : 0.0;
    const double u = chain.idiosyncratic[i];
    for (int left = 0; left < 2; ++left) {
      for (std::size_t v = 0; v <= i; ++v) {
        const double mass = state[left][v];
        if (mass == 0.0) continue;
        for (int right = 0; right < 2; ++right) {
          const double pr = right ? s : 1.0 - s;
          if (pr == 0.0) continue;
          if (left || right) {
            next[right][v + 1] += mass * pr;
          } else {
            next[right][v + 1] += mass * pr * u;
            next[right][v] += mass * pr * (1.0 - u);
          }
        }
      }
    }
    state = std::move(next);
  }
  std::vector<double> pmf(n + 1);
  double total = 0.0;
  for (std::size_t v = 0; v <= n; ++v) {
    pmf[v] = state[0][v] + state[1][v];
    total += pmf[v];
  }
  for (double& x : pmf) x /= total;
  return DiscreteDist(std::move(pmf));
}

StrikeEstimate estimate_call(const Portfolio& portfolio, double level, const NBParams& params,
                             const BoundReport& uniform) {
  StrikeEstimate est;
  est.loss_level = level;
  est.strike = count_strike(portfolio, level);
  if (est.strike >= static_cast<double>(portfolio.size())) {
    // V <= N, so the call is exactly zero.
    est.exact_zero = true;
    est.bound_used = "exact";
    return est;
  }
  const SeriesResult nb = nb_call_expectation(params, est.strike);
  double bound = uniform.bound_value + uniform.truncation_error;
  est.bound_used = "uniform";
  if (est.strike > 1.0) {
    const BoundReport nonuni = to_nonuniform(uniform, est.strike);
    const double alt = nonuni.bound_value + nonuni.truncation_error;
    if (alt < bound) {
      bound = alt;
      est.bound_used = "non-uniform";
    }
  }
  est.call = {nb.value, bound + nb.tail_bound};
  return est;
}

}  // namespace

double Portfolio::expected_defaults() const {
  double mu = 0.0;
  for (double p : default_probs) mu += p;
  return mu;
}

void Portfolio::validate() const {
  if (default_probs.empty()) throw DomainError("portfolio has no obligors");
  if (!(recovery >= 0.0 && recovery <= 1.0)) throw DomainError("recovery rate must lie in [0,1]");
  for (double p : default_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("default probabilities must lie in [0,1]");
  }
  for (const auto& t : tranches) {
    if (!(t.attachment >= 0.0 && t.attachment < t.detachment && t.detachment <= 1.0)) {
      throw DomainError("tranche '" + t.id + "' needs 0 <= attachment < detachment <= 1");
    }
  }
  if (dependence) {
    if (dependence->A.size() != size()) throw DomainError("dependence needs one neighborhood per obligor");
    if (dependence->pairs.marginals != default_probs) {
      throw DomainError("dependence marginals differ from the default probabilities");
    }
  }
}

double count_strike(const Portfolio& portfolio, double loss_level) {
  const double lgd = 1.0 - portfolio.recovery;
  if (lgd <= 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(portfolio.size()) * loss_level / lgd;
}

BoundReport portfolio_bound(const Portfolio& portfolio, double r) {
  if (portfolio.dependence) {
    return corollary2(portfolio.default_probs, portfolio.dependence->pairs, portfolio.dependence->A, r);
  }
  std::vector<DiscreteDist> dists;
  dists.reserve(portfolio.size());
  for (double p : portfolio.default_probs) dists.push_back(DiscreteDist::bernoulli(p));
  return theorem2_mean(dists, r);
}

double portfolio_poisson_bound(const Portfolio& portfolio) {
  if (portfolio.dependence) {
    return poisson_local_bound(portfolio.default_probs, portfolio.dependence->pairs, portfolio.dependence->A);
  }
  return remark_bernoulli_poisson(portfolio.default_probs);
}

TrancheReport tranche_expected_loss(const Portfolio& portfolio, const Tranche& tranche, const NBParams& params) {
  portfolio.validate();
  if (!(tranche.attachment >= 0.0 && tranche.attachment < tranche.detachment && tranche.detachment <= 1.0)) {
    throw DomainError("tranche '" + tranche.id + "' needs 0 <= attachment < detachment <= 1");
  }
  TrancheReport rep;
  rep.tranche = tranche;
  const double lgd = 1.0 - portfolio.recovery;
  const double scale = lgd / static_cast<double>(portfolio.size());
  const double mu = portfolio.expected_defaults();

  if (lgd <= 0.0 || mu == 0.0) {
    rep.attach = {tranche.attachment, count_strike(portfolio, tranche.attachment), {}, true, "exact"};
    rep.detach = {tranche.detachment, count_strike(portfolio, tranche.detachment), {}, true, "exact"};
    rep.notes.push_back(lgd <= 0.0 ? "full recovery: every loss is 0" : "no obligor can default: every loss is 0");
    return rep;
  }
  if (!mean_matched(params, mu)) {
    throw DomainError("tranche estimates need NB parameters matched to the expected number of defaults");
  }
  rep.nb_bound = portfolio_bound(portfolio, params.r);
  rep.poisson_bound = portfolio_poisson_bound(portfolio);

  rep.attach = estimate_call(portfolio, tranche.attachment, params, rep.nb_bound);
  rep.detach = estimate_call(portfolio, tranche.detachment, params, rep.nb_bound);
  if (rep.attach.exact_zero) {
    rep.notes.push_back("attachment is at or beyond the maximal loss 1-R; tranche loss is exactly 0");
  } else if (rep.detach.exact_zero) {
    rep.notes.push_back("detachment is at or beyond the maximal loss 1-R; only the attachment call is approximated");
  }
  rep.expected_loss = {scale * (rep.attach.call.value - rep.detach.call.value),
                       scale * (rep.attach.call.error + rep.detach.call.error)};
  return rep;
}

std::vector<TrancheReport> all_tranches(const Portfolio& portfolio, const NBParams& params) {
  std::vector<TrancheReport> out;
  out.reserve(portfolio.tranches.size());
  for (const auto& t : portfolio.tranches) out.push_back(tranche_expected_loss(portfolio, t, params));
  return out;
}

std::optional<DiscreteDist> portfolio_loss_distribution(const Portfolio& portfolio) {
  if (!portfolio.dependence) {
    std::vector<DiscreteDist> dists;
    dists.reserve(portfolio.size());
    for (double p : portfolio.default_probs) dists.push_back(DiscreteDist::bernoulli(p));
    return convolve_all(dists);
  }
  try {
    return chain_count_distribution(CommonShockChain::fit(portfolio.dependence->pairs));
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

Certified exact_tranche_loss(const Portfolio& portfolio, const Tranche& tranche, const DiscreteDist& defaults) {
  const double lgd = 1.0 - portfolio.recovery;
  if (lgd <= 0.0) return {};
  const double scale = lgd / static_cast<double>(portfolio.size());
  const Certified a = exact_call_expectation(defaults, count_strike(portfolio, tranche.attachment));
  const Certified d = exact_call_expectation(defaults, count_strike(portfolio, tranche.detachment));
  return {scale * (a.value - d.value), scale * (a.error + d.error)};
}

std::vector<BoundComparison> compare_bounds(const Portfolio& portfolio, double r) {
  portfolio.validate();
  std::vector<BoundComparison> rows;
  rows.push_back({"independent", remark_bernoulli_nb(portfolio.default_probs, r),
                  remark_bernoulli_poisson(portfolio.default_probs)});
  if (portfolio.dependence) {
    const auto& dep = *portfolio.dependence;
    rows.push_back({"dependent", corollary2(portfolio.default_probs, dep.pairs, dep.A, r).bound_value,
                    poisson_local_bound(portfolio.default_probs, dep.pairs, dep.A)});
  }
  return rows;
}

}  // namespace nbcall

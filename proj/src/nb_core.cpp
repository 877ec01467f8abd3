#include "nbcall/nb_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nbcall/errors.hpp"

namespace nbcall {

namespace {

std::string describe(const NBParams& params) {
  std::ostringstream os;
  os << "NB(r=" << params.r << ", p=" << params.p << ")";
  return os.str();
}

}  // namespace

NBParams NBParams::make(double r, double p) {
  if (!std::isfinite(r) || r <= 0.0) {
    throw DomainError("negative binomial dispersion must be positive and finite, got r=" +
                      std::to_string(r));
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("negative binomial success probability must lie in (0,1), got p=" +
                      std::to_string(p));
  }
  return NBParams{r, p, 1.0 - p};
}

void require_standing_assumption(const NBParams& params, std::string_view operation) {
  if (!params.standing_assumption()) {
    throw DomainError(std::string(operation) + " requires r > 1, got " + describe(params));
  }
}

void SeriesControl::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw DomainError("series rel_tol must lie in (0,1)");
  }
  if (max_terms < 1) {
    throw DomainError("series max_terms must be at least 1");
  }
}

void require_strike(double z) {
  if (!std::isfinite(z) || z < 0.0) {
    throw DomainError("call strike z must be finite and non-negative, got z=" + std::to_string(z));
  }
}

double nb_log_pmf(const NBParams& params, std::int64_t k) {
  if (k < 0) {
    return -INFINITY;
  }
  const double kd = static_cast<double>(k);
  return std::lgamma(params.r + kd) - std::lgamma(params.r) - std::lgamma(kd + 1.0) +
         params.r * std::log(params.p) + kd * std::log1p(-params.p);
}

double nb_pmf(const NBParams& params, std::int64_t k) { return std::exp(nb_log_pmf(params, k)); }

MeanVar nb_mean_var(const NBParams& params) {
  const double mean = params.r * params.q / params.p;
  return {mean, mean / params.p};
}

SeriesResult nb_call_expectation(const NBParams& params, double z, const SeriesControl& ctl) {
  require_strike(z);
  ctl.validate();

  // First contributing index: the smallest integer strictly above z.
  const auto first = static_cast<std::int64_t>(std::floor(z)) + 1;
  const double log_q = std::log(params.q);
  double log_pmf = nb_log_pmf(params, first);

  SeriesResult out;
  for (std::int64_t k = first;; ++k) {
    const double kd = static_cast<double>(k);
    const double term = (kd - z) * std::exp(log_pmf);
    out.value += term;
    ++out.terms;

    // pmf ratio q(r+m)/(m+1) is monotone in m and tends to q, so its
    // supremum over m >= k is max(current ratio, q).
    const double ratio = params.q * (params.r + kd) / (kd + 1.0);
    const double sup_ratio = params.r > 1.0 ? ratio : params.q;
    const double payoff_growth = (kd + 1.0 - z) / (kd - z);
    const double rho = sup_ratio * payoff_growth;
    if (rho < 1.0) {
      out.tail_bound = term * rho / (1.0 - rho);
      if (out.tail_bound <= ctl.rel_tol * out.value || (term == 0.0 && out.value == 0.0)) {
        return out;
      }
    }
    if (out.terms >= ctl.max_terms) {
      throw ConvergenceError("nb_call_expectation: term budget exhausted for " + describe(params),
                             out.value, out.tail_bound);
    }
    log_pmf += std::log(params.r + kd) - std::log(kd + 1.0) + log_q;
  }
}

CallBoundCheck verify_call_expectation_bounds(const NBParams& params, double z) {
  require_strike(z);
  CallBoundCheck check;
  check.expectation = nb_call_expectation(params, z).value;
  check.mean_bound = params.r * params.q / params.p;
  check.mean_slack = check.mean_bound - check.expectation;
  check.passed = check.mean_slack >= -1e-12 * std::max(1.0, check.mean_bound);
  if (z > 1.0) {
    const double bound = params.r * (params.r + 1.0) * params.q * params.q / (z * params.p * params.p);
    check.second_bound = bound;
    check.second_slack = bound - check.expectation;
    check.passed = check.passed && *check.second_slack >= -1e-12 * std::max(1.0, bound);
  }
  return check;
}

NBParams match_mean(double mu, double r) {
  if (!std::isfinite(mu) || mu <= 0.0) {
    throw DomainError("mean matching requires a positive target mean, got " + std::to_string(mu));
  }
  if (!(r > 1.0) || !std::isfinite(r)) {
    throw DomainError("mean matching requires r > 1, got r=" + std::to_string(r));
  }
  return NBParams::make(r, r / (r + mu));
}

MatchResult match_mean_var(double mu, double var) {
  if (!std::isfinite(mu) || mu <= 0.0 || !std::isfinite(var)) {
    throw DomainError("mean-variance matching requires a positive finite mean");
  }
  if (!(var > mu)) {
    throw InfeasibleError("mean-variance matching needs Var(V) > E(V), got mean=" +
                              std::to_string(mu) + " variance=" + std::to_string(var),
                          "Var(V) > E(V)");
  }
  MatchResult out{NBParams::make(mu * mu / (var - mu), mu / var), {}};
  if (!out.params.standing_assumption()) {
    out.warnings.push_back("matched r=" + std::to_string(out.params.r) +
                           " is not above 1; bound formulas do not apply");
  }
  return out;
}

}  // namespace nbcall

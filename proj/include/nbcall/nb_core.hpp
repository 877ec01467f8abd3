#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbcall {

/// Negative binomial law NB(r, p) on {0, 1, 2, ...} with
/// P(N = k) = C(r+k-1, k) p^r q^k and q = 1 - p.
///
/// Construction accepts any r > 0 so the plain distribution queries work for
/// small dispersions; every bound operation additionally requires r > 1
/// (see require_standing_assumption).
struct NBParams {
  double r = 0.0;
  double p = 0.0;
  double q = 0.0;

  static NBParams make(double r, double p);

  bool standing_assumption() const noexcept { return r > 1.0; }
};

/// Throws DomainError naming `operation` unless r > 1.
void require_standing_assumption(const NBParams& params, std::string_view operation);

/// Truncation control shared by every infinite series in the library.
struct SeriesControl {
  double rel_tol = 1e-12;
  std::size_t max_terms = 1'000'000;

  void validate() const;
};

/// A truncated series value. The exact sum lies in [value - tail_bound, value + tail_bound].
struct SeriesResult {
  double value = 0.0;
  double tail_bound = 0.0;
  std::size_t terms = 0;
};

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
};

/// Call payoff (k - z)^+.
inline double call_payoff(double k, double z) noexcept { return k > z ? k - z : 0.0; }

/// Throws DomainError unless z is finite and non-negative.
void require_strike(double z);

double nb_log_pmf(const NBParams& params, std::int64_t k);
double nb_pmf(const NBParams& params, std::int64_t k);
MeanVar nb_mean_var(const NBParams& params);

/// E[(N_{r,p} - z)^+], summed from the first integer above z until the
/// geometric tail certificate drops below ctl.rel_tol relative to the partial sum.
SeriesResult nb_call_expectation(const NBParams& params, double z, const SeriesControl& ctl = {});

struct CallBoundCheck {
  double expectation = 0.0;
  double mean_bound = 0.0;  // rq/p
  double mean_slack = 0.0;
  std::optional<double> second_bound;  // r(r+1)q^2 / (z p^2), only for z > 1
  std::optional<double> second_slack;
  bool passed = false;
};

/// Checks E[(N-z)^+] <= rq/p (all z >= 0) and E[(N-z)^+] <= r(r+1)q^2/(z p^2) (z > 1).
/// Slacks are absolute; a check passes with slack >= -1e-12 * max(1, bound).
CallBoundCheck verify_call_expectation_bounds(const NBParams& params, double z);

/// NB parameters with the given r whose mean rq/p equals mu.
NBParams match_mean(double mu, double r);

struct MatchResult {
  NBParams params;
  std::vector<std::string> warnings;
};

/// NB parameters whose mean and variance equal (mu, var). Requires var > mu > 0.
MatchResult match_mean_var(double mu, double var);

}  // namespace nbcall

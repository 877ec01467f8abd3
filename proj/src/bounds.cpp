#include "nbcall/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nbcall/errors.hpp"
#include "nbcall/stein.hpp"

namespace nbcall {

namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
  }
}

BoundReport make_report(const NBParams& params, MatchingMode mode, std::string name, double structural) {
  BoundReport report;
  report.matched = params;
  report.mode = mode;
  report.bound_name = std::move(name);
  report.prefactor = uniform_prefactor(params);
  report.structural_term = structural;
  report.bound_value = report.prefactor * structural;
  return report;
}

struct StructuralSums {
  double first_order = 0.0;   // sum_{k>=1} k |c_k|
  double second_order = 0.0;  // sum_{k>=2} k(k-1)/2 |c_k|
  double first_error = 0.0;
  double second_error = 0.0;
};

// Sums over c_k = (p m + q k) P(X=k) - (k+1) P(X=k+1) for one marginal. The
// contribution of values beyond the table is bounded through the tail
// certificate: terms touching P(X=j), j past the table, are at most
// p m j P + q j^2 P + j^2 P (first order) and (p m / 2) j^2 P + (q+1)/2 j^3 P
// (second order). The tail also shifts m by at most its first moment.
// c_k is a difference of nearly equal terms whenever the marginal is close to
// the matched law, so it is evaluated in extended precision.
StructuralSums structural_sums(const DiscreteDist& dist, double p, double q) {
  const auto last = static_cast<std::ptrdiff_t>(dist.size()) - 1;
  long double m = 0.0L;
  for (std::ptrdiff_t k = 1; k <= last; ++k) m += static_cast<long double>(k) * dist[k];
  const long double pm = static_cast<long double>(p) * m;
  long double first = 0.0L;
  long double second = 0.0L;
  // For a truncated table c_last involves the unknown P(X = last+1); its
  // represented part goes to the error below instead of the sum.
  const std::ptrdiff_t exact_end = dist.truncated() ? last - 1 : last;
  for (std::ptrdiff_t k = 1; k <= exact_end; ++k) {
    const long double kd = static_cast<long double>(k);
    const long double c = (pm + q * kd) * dist[k] - (kd + 1.0L) * dist[k + 1];
    first += kd * std::abs(c);
    second += 0.5L * kd * (kd - 1.0L) * std::abs(c);
  }
  StructuralSums s;
  s.first_order = static_cast<double>(first);
  s.second_order = static_cast<double>(second);
  if (dist.truncated()) {
    const TailCertificate& t = dist.tail();
    const double pmu = p * dist.mean_upper();
    const double kl = static_cast<double>(last);
    const double boundary = kl >= 1.0 ? (pmu + q * kl) * dist[last] : 0.0;
    const double shift = p * t.first_moment;
    s.first_error = pmu * t.first_moment + (q + 1.0) * t.second_moment + kl * boundary +
                    shift * dist.mean_upper();
    s.second_error = 0.5 * pmu * t.second_moment + 0.5 * (q + 1.0) * t.third_moment +
                     0.5 * kl * (kl - 1.0) * boundary + 0.5 * shift * dist.second_moment_upper();
  }
  return s;
}

void require_pair_inputs(std::span<const double> marginals, const PairwiseBernoulli& pairs,
                         std::span<const IndexSet> neighborhoods) {
  if (neighborhoods.size() != marginals.size()) {
    throw DomainError("need one neighborhood A_i per marginal");
  }
  for (double p : marginals) require_probability(p, "default probability");
  for (std::size_t i = 0; i < neighborhoods.size(); ++i) {
    const auto& Ai = neighborhoods[i];
    if (std::find(Ai.begin(), Ai.end(), i) == Ai.end()) {
      throw DomainError("index " + std::to_string(i) + " must belong to its own neighborhood A_i");
    }
    for (auto j : Ai) {
      if (j >= marginals.size()) throw DomainError("neighborhood references an index outside J");
      const double pij = i == j ? marginals[i] : pairs.pair(i, j);
      if (!(pij >= 0.0 && pij <= std::min(marginals[i], marginals[j]) + 1e-15)) {
        throw DomainError("pair probability p_{" + std::to_string(i) + "," + std::to_string(j) +
                          "} must lie in [0, min(p_i, p_j)]");
      }
    }
  }
}

double pair_at(std::span<const double> marginals, const PairwiseBernoulli& pairs, std::size_t i, std::size_t j) {
  return i == j ? marginals[i] : pairs.pair(i, j);
}

}  // namespace

std::string_view to_string(MatchingMode mode) {
  switch (mode) {
    case MatchingMode::MeanGivenR:
      return "mean";
    case MatchingMode::MeanAndVariance:
      return "meanvar";
    case MatchingMode::Explicit:
      return "explicit";
  }
  return "unknown";
}

double uniform_prefactor(const NBParams& params) { return envelope_lemma1_delta(params).value; }

BoundReport to_nonuniform(const BoundReport& uniform, double z) {
  BoundReport out = uniform;
  const double old_prefactor = uniform.prefactor;
  out.prefactor = envelope_remark1(uniform.matched, z).value;
  out.bound_value = out.prefactor * out.structural_term;
  if (old_prefactor > 0.0) {
    out.truncation_error = uniform.truncation_error * out.prefactor / old_prefactor;
  }
  out.z = z;
  out.bound_name = uniform.bound_name + "/non-uniform";
  return out;
}

BoundReport theorem1_mean(const DependencyModel& model, double r) {
  const MomentSet mom = moments(model);
  const NBParams params = match_mean(mom.mean_V, r);
  require_standing_assumption(params, "theorem1_mean");
  double u = 0.0;
  for (const auto& m : mom.per_index) {
    u += params.p * m.mean * m.block_mean + params.q * m.cross + m.cross_minus;
  }
  return make_report(params, MatchingMode::MeanGivenR, "theorem1-mean", u);
}

BoundReport theorem1_meanvar(const DependencyModel& model) {
  if (model.is_pairwise()) {
    throw UnsupportedLawError("the variance-matched bound needs a full joint law; pairwise inputs only fix two moments");
  }
  const MomentSet mom = moments(model);
  const MatchResult match = match_mean_var(mom.mean_V, mom.var_V);
  const NBParams& params = match.params;
  const std::vector<SmoothingTerms> smooth = smoothing(model);

  double u = 0.0;
  double err = 0.0;
  bool degenerate = false;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& m = mom.per_index[i];
    const auto& s = smooth[i];
    const double mismatch = params.p * m.mean * m.block_mean + params.q * m.cross - m.cross_minus;
    u += params.p * m.mean * s.weighted_A + params.q * s.weighted_iAB + std::abs(mismatch) * s.weighted_B +
         s.weighted_second;
    err += s.error;
    degenerate = degenerate || s.degenerate;
  }
  BoundReport report = make_report(params, MatchingMode::MeanAndVariance, "theorem1-meanvar", u);
  report.truncation_error = report.prefactor * err;
  report.warnings = match.warnings;
  if (degenerate) {
    report.warnings.push_back("some conditioning event determines V, so D(V|.) = 2 and the bound degenerates");
  }
  return report;
}

BoundReport corollary2(std::span<const double> marginals, const PairwiseBernoulli& pairs,
                       std::span<const IndexSet> neighborhoods, double r) {
  require_pair_inputs(marginals, pairs, neighborhoods);
  double mu = 0.0;
  for (double p : marginals) mu += p;
  const NBParams params = match_mean(mu, r);

  double u = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    double pair_sum = 0.0;
    double marginal_sum = 0.0;
    for (auto j : neighborhoods[i]) {
      pair_sum += pair_at(marginals, pairs, i, j);
      marginal_sum += marginals[j];
    }
    u += (1.0 + params.q) * pair_sum + marginals[i] * (params.p * marginal_sum - 1.0);
  }
  std::vector<std::string> warnings;
  if (u < 0.0) {
    warnings.push_back("structural sum " + std::to_string(u) + " is negative; clamped to 0");
    u = 0.0;
  }
  BoundReport report = make_report(params, MatchingMode::MeanGivenR, "corollary2", u);
  report.warnings = std::move(warnings);
  return report;
}

BoundReport theorem2_mean(std::span<const DiscreteDist> marginals, double r, const SeriesControl& ctl) {
  ctl.validate();
  double mu = 0.0;
  for (const auto& d : marginals) mu += d.mean();
  const NBParams params = match_mean(mu, r);

  double u = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    const StructuralSums s = structural_sums(marginals[i], params.p, params.q);
    if (!(s.first_error <= ctl.rel_tol * std::max(1.0, s.first_order))) {
      throw ConvergenceError("theorem2_mean: tail certificate of marginal " + std::to_string(i) +
                                 " exceeds the tolerance; extend its support",
                             s.first_order, s.first_error);
    }
    u += s.first_order;
    err += s.first_error;
  }
  BoundReport report = make_report(params, MatchingMode::MeanGivenR, "theorem2-mean", u);
  report.truncation_error = report.prefactor * err;
  return report;
}

BoundReport theorem2_meanvar(std::span<const DiscreteDist> marginals, const SeriesControl& ctl) {
  ctl.validate();
  double mu = 0.0;
  double var = 0.0;
  for (const auto& d : marginals) {
    mu += d.mean();
    var += d.variance();
  }
  const MatchResult match = match_mean_var(mu, var);
  const NBParams& params = match.params;

  double delta_sum = 0.0;
  double delta_max = 0.0;
  double first = 0.0;
  double second = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    const auto& d = marginals[i];
    const Certified dtv = dtv_unit_shift(d);
    const double delta_i = std::min(0.5, 1.0 - dtv.value);
    delta_sum += delta_i;
    delta_max = std::max(delta_max, delta_i);

    const double m = d.mean();
    const double m2 = d.moment(2);
    first += m * std::abs(params.p * m * m + params.q * m2 - (m2 - m));
    const StructuralSums s = structural_sums(d, params.p, params.q);
    if (!(s.second_error <= ctl.rel_tol * std::max(1.0, s.second_order))) {
      throw ConvergenceError("theorem2_meanvar: tail certificate of marginal " + std::to_string(i) +
                                 " exceeds the tolerance; extend its support",
                             s.second_order, s.second_error);
    }
    second += s.second_order;
    const TailCertificate& t = d.tail();
    err += s.second_error + d.mean_upper() * (2.0 * m * t.first_moment + 2.0 * t.second_moment + t.first_moment) +
           t.first_moment * std::abs(params.p * m * m + params.q * m2 - (m2 - m));
  }
  const double constant = std::sqrt(2.0 / std::numbers::pi) / std::sqrt(0.25 + delta_sum - delta_max);
  BoundReport report =
      make_report(params, MatchingMode::MeanAndVariance, "theorem2-meanvar", constant * (first + second));
  report.truncation_error = report.prefactor * constant * err;
  report.warnings = match.warnings;
  report.details.push_back({"smoothing_constant_theorem2", constant});
  report.details.push_back({"delta_sum", delta_sum});
  report.details.push_back({"delta_max", delta_max});
  report.details.push_back({"moment_term", first});
  report.details.push_back({"pmf_term", second});
  return report;
}

double remark_bernoulli_nb(std::span<const double> p, double r) {
  double mu = 0.0;
  for (double pi : p) {
    require_probability(pi, "Bernoulli probability");
    mu += pi;
  }
  if (mu == 0.0) return 0.0;
  const NBParams params = match_mean(mu, r);
  double u = 0.0;
  for (double pi : p) u += pi * (1.0 - params.p * (1.0 - pi));
  return uniform_prefactor(params) * u;
}

double remark_bernoulli_poisson(std::span<const double> p) {
  double lambda = 0.0;
  double squares = 0.0;
  for (double pi : p) {
    require_probability(pi, "Bernoulli probability");
    lambda += pi;
    squares += pi * pi;
  }
  return (2.0 * std::exp(lambda) - 1.0) * squares;
}

double remark_geometric_nb(std::span<const double> q, GeometricMatching mode, const GeometricOptions& options,
                           std::vector<std::string>* warnings) {
  double mu = 0.0;
  double var = 0.0;
  double q_sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double qi = q[i];
    if (!(qi >= 0.0 && qi < 1.0)) {
      throw DomainError("geometric failure probabilities must lie in [0,1)");
    }
    if (qi > 0.5) {
      const std::string msg = "q_" + std::to_string(i) + " = " + std::to_string(qi) + " exceeds 1/2";
      if (options.strict_q_range) throw DomainError(msg);
      if (warnings != nullptr) warnings->push_back(msg);
    }
    const double pi = 1.0 - qi;
    mu += qi / pi;
    var += qi / (pi * pi);
    q_sum += qi;
  }
  if (mu == 0.0) return 0.0;

  if (mode == GeometricMatching::Mean) {
    const double r = options.r.value_or(static_cast<double>(q.size()));
    const NBParams params = match_mean(mu, r);
    double s = 0.0;
    for (double qi : q) {
      const double pi = 1.0 - qi;
      s += std::abs(params.p - pi) * qi / (pi * pi);
    }
    return uniform_prefactor(params) * s;
  }

  if (!(q_sum > 0.25)) {
    throw InfeasibleError("the mean-variance geometric bound needs sum q_i > 1/4, got " + std::to_string(q_sum),
                          "sum q_i > 1/4");
  }
  const MatchResult match = match_mean_var(mu, var);
  if (warnings != nullptr) {
    warnings->insert(warnings->end(), match.warnings.begin(), match.warnings.end());
  }
  const NBParams& params = match.params;
  double s = 0.0;
  for (double qi : q) {
    const double pi = 1.0 - qi;
    s += std::abs(params.p - pi) * qi * qi / (pi * pi * pi);
  }
  return 3.0 * uniform_prefactor(params) * std::sqrt(2.0 / std::numbers::pi) / std::sqrt(q_sum - 0.25) * s;
}

double remark_geometric_poisson(std::span<const double> q) {
  double lambda = 0.0;
  double s = 0.0;
  for (double qi : q) {
    if (!(qi >= 0.0 && qi < 1.0)) {
      throw DomainError("geometric failure probabilities must lie in [0,1)");
    }
    const double pi = 1.0 - qi;
    lambda += qi / pi;
    s += (8.0 - 7.0 * pi) * qi * qi / (pi * pi * pi);
  }
  return (2.0 * std::exp(lambda) - 1.0) * s;
}

double poisson_local_bound(std::span<const double> marginals, const PairwiseBernoulli& pairs,
                           std::span<const IndexSet> neighborhoods) {
  require_pair_inputs(marginals, pairs, neighborhoods);
  double lambda = 0.0;
  for (double p : marginals) lambda += p;
  double s = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    for (auto j : neighborhoods[i]) {
      if (j != i) s += pair_at(marginals, pairs, i, j);
      s += marginals[i] * marginals[j];
    }
  }
  return (2.0 * std::exp(lambda) - 1.0) * s;
}

}  // namespace nbcall

#include "nbcall/stein.hpp"

#include <algorithm>
#include <cmath>

#include "nbcall/errors.hpp"

namespace nbcall {

namespace {

constexpr double kMaxLogDouble = 709.0;

// exp(log_a) - exp(log_b) with overflow reported instead of returned as inf - inf.
Envelope exp_difference(double log_a, double log_b) {
  if (log_a > kMaxLogDouble) {
    return {INFINITY, true};
  }
  return {std::exp(log_a) - std::exp(log_b), false};
}

void require_nonuniform_domain(double z) {
  require_strike(z);
  if (!(z > 1.0)) {
    throw DomainError("the z-dependent envelopes require z > 1, got z=" + std::to_string(z));
  }
}

}  // namespace

SteinSolution::SteinSolution(const NBParams& params, double z, SeriesControl ctl)
    : params_(params), z_(z), ctl_(ctl) {
  require_strike(z);
  ctl_.validate();
  call_ = nb_call_expectation(params_, z_, ctl_);
}

SeriesResult SteinSolution::value_certified(std::int64_t k) const {
  if (k < 0) {
    throw DomainError("g_z is defined on non-negative integers");
  }
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(k); it != memo_.end()) {
      return it->second;
    }
  }
  SeriesResult result = compute(k);
  std::lock_guard lock(mutex_);
  return memo_.try_emplace(k, result).first->second;
}

SeriesResult SteinSolution::compute(std::int64_t k) const {
  if (k == 0) {
    return {};
  }
  const double r = params_.r;
  const double q = params_.q;
  const double log_q = std::log(q);
  const double mean_call = call_.value;

  // With pi the NB pmf, k pi_k g(k) = sum_{j<k} pi_j (h(j) - E) = -sum_{j>=k} pi_j (h(j) - E).
  // Below z + E every h(j) - E is <= 0, above it >= 0, so summing over the side
  // that stays sign-definite avoids cancellation.
  const double kd0 = static_cast<double>(k);
  if (kd0 <= z_ + mean_call) {
    // pi_j / (k pi_k) for j = k-1 down to 0, using pi_j / pi_{j+1} = (j+1) / (q (r+j)).
    double log_w = -std::log(kd0);
    double sum = 0.0;
    double weights = 0.0;
    for (std::int64_t j = k - 1; j >= 0; --j) {
      const double jd = static_cast<double>(j);
      log_w += std::log(jd + 1.0) - log_q - std::log(r + jd);
      const double w = std::exp(log_w);
      sum += w * (call_payoff(jd, z_) - mean_call);
      weights += w;
    }
    return {sum, weights * call_.tail_bound, static_cast<std::size_t>(k)};
  }

  double log_weight = -std::log(static_cast<double>(k));
  double partial = 0.0;
  double abs_sum = 0.0;
  double tail = INFINITY;
  std::size_t terms = 0;
  for (std::int64_t j = k;; ++j) {
    const double jd = static_cast<double>(j);
    const double term = std::exp(log_weight) * (call_payoff(jd, z_) - mean_call);
    partial += term;
    abs_sum += std::abs(term);
    ++terms;

    log_weight += std::log(r + jd) - std::log(jd + 1.0) + log_q;

    // |(m - z)^+ - E| <= m + E, and both the weight ratio q(r+m)/(m+1) and
    // (m+1+E)/(m+E) are non-increasing in m once r > 1.
    const double next = jd + 1.0;
    const double weight_ratio = r > 1.0 ? q * (r + next) / (next + 1.0) : q;
    const double rho = weight_ratio * (next + 1.0 + mean_call) / (next + mean_call);
    if (rho < 1.0) {
      tail = std::exp(log_weight) * (next + mean_call) / (1.0 - rho);
      double scale = abs_sum;
      if (q < 1e-6) {
        scale = std::max(scale, 1.0);
      }
      if (tail <= ctl_.rel_tol * scale) {
        break;
      }
    }
    if (terms >= ctl_.max_terms) {
      throw ConvergenceError("g_z series did not converge within the term budget", -partial, tail);
    }
  }
  return {-partial, tail, terms};
}

double solve(const NBParams& params, double z, std::int64_t k, const SeriesControl& ctl) {
  return SteinSolution(params, z, ctl).value(k);
}

double delta(const NBParams& params, double z, std::int64_t k, const SeriesControl& ctl) {
  return SteinSolution(params, z, ctl).delta(k);
}

Envelope envelope_lemma1_value(const NBParams& params) {
  const double log_value = -(params.r + 1.0) * std::log(params.p);
  if (log_value > kMaxLogDouble) {
    return {INFINITY, true};
  }
  return {std::exp(log_value), false};
}

Envelope envelope_lemma1_delta(const NBParams& params) {
  const double log_p = std::log(params.p);
  return exp_difference(std::log(2.0) - (params.r + 1.0) * log_p, -log_p);
}

std::string_view to_string(Lemma2Branch branch) {
  switch (branch) {
    case Lemma2Branch::AtOrAboveStrike:
      return "Lemma2-k>=z";
    case Lemma2Branch::BelowStrike:
      return "Lemma2-2<=k<z";
    case Lemma2Branch::AtOne:
      return "Lemma2-k=1";
  }
  return "Lemma2";
}

Lemma2Branch lemma2_branch(double z, std::int64_t k) {
  require_nonuniform_domain(z);
  if (k < 1) {
    throw DomainError("the z-dependent envelopes require k >= 1");
  }
  const double kd = static_cast<double>(k);
  if (kd >= z) return Lemma2Branch::AtOrAboveStrike;
  if (k >= 2) return Lemma2Branch::BelowStrike;
  return Lemma2Branch::AtOne;
}

Envelope envelope_lemma2(const NBParams& params, double z, std::int64_t k) {
  const double log_p = std::log(params.p);
  const double r = params.r;
  Envelope inner;
  double scale = 1.0 / z;
  switch (lemma2_branch(z, k)) {
    case Lemma2Branch::AtOrAboveStrike:
      inner = exp_difference(std::log(2.0) - (r + 1.0) * log_p, -log_p);
      break;
    case Lemma2Branch::BelowStrike:
      inner = exp_difference(std::log1p(1.0 / params.q) - (r + 2.0) * log_p, -2.0 * log_p);
      break;
    case Lemma2Branch::AtOne:
      inner = exp_difference(std::log(2.0) - (r + 2.0) * log_p, -2.0 * log_p);
      scale = (r + 1.0) / z;
      break;
  }
  if (inner.overflowed) return inner;
  return {scale * inner.value, false};
}

Envelope envelope_remark1(const NBParams& params, double z) {
  require_nonuniform_domain(z);
  const double log_p = std::log(params.p);
  const Envelope inner = exp_difference(std::log1p(1.0 / params.q) - (params.r + 2.0) * log_p, -2.0 * log_p);
  if (inner.overflowed) return inner;
  return {(params.r + 1.0) / z * inner.value, false};
}

bool EnvelopeReport::passed() const { return slack >= -1e-9 * std::max(1.0, envelope); }

std::vector<EnvelopeReport> check_envelopes(const SteinSolution& solution, std::int64_t k) {
  const NBParams& params = solution.params();
  const double z = solution.strike();
  const double g = solution.value(k);
  const double dg = solution.delta(k);

  std::vector<EnvelopeReport> out;
  auto add = [&](double value, const Envelope& env, std::string name) {
    out.push_back({k, z, value, env.value, env.value - std::abs(value), std::move(name)});
  };
  add(g, envelope_lemma1_value(params), "Lemma1-i");
  add(dg, envelope_lemma1_delta(params), "Lemma1-ii");
  if (z > 1.0 && k >= 1) {
    add(dg, envelope_lemma2(params, z, k), std::string(to_string(lemma2_branch(z, k))));
    add(dg, envelope_remark1(params, z), "Remark1");
  }
  return out;
}

std::array<SeriesInequality, 5> verify_appendix_series(const NBParams& params, std::int64_t k,
                                                       std::size_t n_terms) {
  const double r = params.r;
  const double p = params.p;
  const double q = params.q;
  const double kd = static_cast<double>(k);

  // Each series is sum_j t_j with t_j = t_{j-1} * (r + a + j) / (b + j) * q.
  auto partial = [&](double first, std::int64_t j0, double num_shift, double den_shift) {
    double term = first;
    double sum = 0.0;
    for (std::size_t n = 0; n < n_terms; ++n) {
      const double jd = static_cast<double>(j0) + static_cast<double>(n);
      term *= (r + num_shift + jd) / (den_shift + jd) * q;
      sum += term;
    }
    return sum;
  };

  std::array<SeriesInequality, 5> out{};
  auto finish = [](SeriesInequality& s, double sum, double closed) {
    s.applicable = true;
    s.partial_sum = sum;
    s.closed_form = closed;
    s.slack = (closed - sum) / std::max(1.0, std::abs(closed));
  };
  if (k >= 1) {
    finish(out[0], partial(1.0, 1, kd - 1.0, kd - 1.0), std::pow(p, -(r + 1.0)) - 1.0);
    finish(out[1], partial(1.0, 1, kd - 1.0, kd), (std::pow(p, -r) - 1.0) / (r * q) - 1.0);
    finish(out[2], partial(q, 2, kd - 1.0, kd - 1.0), (std::pow(p, -(r + 1.0)) - 1.0) / r - q);
  }
  if (k >= 2) {
    finish(out[3], partial(1.0, 1, kd, kd - 1.0), (std::pow(p, -(r + 2.0)) - 1.0) / ((r + 1.0) * q) - 1.0);
    finish(out[4], partial(1.0 / kd, 1, kd - 1.0, kd),
           (std::pow(p, -r) - 1.0) / (r * (r + 1.0) * q * q) - 0.5);
  }
  return out;
}

}  // namespace nbcall

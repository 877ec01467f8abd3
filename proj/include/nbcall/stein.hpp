#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nbcall/nb_core.hpp"

namespace nbcall {

/// The NB Stein operator  (A g)(k) = q (r + k) g(k+1) - k g(k).
template <class G>
double stein_apply(const NBParams& params, G&& g, std::int64_t k) {
  const double kd = static_cast<double>(k);
  return params.q * (params.r + kd) * g(k + 1) - kd * g(k);
}

/// Solution g_z of  (A g)(k) = (k - z)^+ - E[(N_{r,p} - z)^+]  with g_z(0) = 0:
///
///   g_z(k) = - sum_{j >= k} [prod_{m=k}^{j-1} (r+m)/m] (1/j) q^{j-k} [(j - z)^+ - E(N - z)^+].
///
/// Values are memoized per k. The cache is write-once per key and guarded, so
/// one instance can be shared between threads.
class SteinSolution {
 public:
  SteinSolution(const NBParams& params, double z, SeriesControl ctl = {});

  const NBParams& params() const noexcept { return params_; }
  double strike() const noexcept { return z_; }
  const SeriesResult& call_expectation() const noexcept { return call_; }

  SeriesResult value_certified(std::int64_t k) const;
  double value(std::int64_t k) const { return value_certified(k).value; }
  double operator()(std::int64_t k) const { return value(k); }
  /// Forward difference g_z(k+1) - g_z(k).
  double delta(std::int64_t k) const { return value(k + 1) - value(k); }

 private:
  SeriesResult compute(std::int64_t k) const;

  NBParams params_;
  double z_;
  SeriesControl ctl_;
  SeriesResult call_;
  mutable std::mutex mutex_;
  mutable std::map<std::int64_t, SeriesResult> memo_;
};

double solve(const NBParams& params, double z, std::int64_t k, const SeriesControl& ctl = {});
double delta(const NBParams& params, double z, std::int64_t k, const SeriesControl& ctl = {});

/// An envelope value; `overflowed` is set when the closed form exceeds the
/// double range, in which case value is +infinity.
struct Envelope {
  double value = 0.0;
  bool overflowed = false;
};

/// p^{-(r+1)}: uniform bound on |g_z|.
Envelope envelope_lemma1_value(const NBParams& params);
/// 2 p^{-(r+1)} - p^{-1}: uniform bound on |Delta g_z|.
Envelope envelope_lemma1_delta(const NBParams& params);

enum class Lemma2Branch { AtOrAboveStrike, BelowStrike, AtOne };

std::string_view to_string(Lemma2Branch branch);

/// Branch selector for the z-dependent bound on |Delta g_z(k)| (z > 1, k >= 1).
/// For integer k >= 1 and z > 1 the three ranges k >= z, 2 <= k < z and k = 1
/// are exhaustive.
Lemma2Branch lemma2_branch(double z, std::int64_t k);

/// Non-uniform bound on |Delta g_z(k)|:
///   k >= z      : (1/z) (2 p^{-(r+1)} - p^{-1})
///   2 <= k < z  : (1/z) ((1 + 1/q) p^{-(r+2)} - p^{-2})
///   k = 1       : ((r+1)/z) (2 p^{-(r+2)} - p^{-2})
Envelope envelope_lemma2(const NBParams& params, double z, std::int64_t k);

/// theta_{r,p,z} = ((r+1)/z) ((1 + 1/q) p^{-(r+2)} - p^{-2}), a k-free bound on
/// |Delta g_z(k)| for k >= 1 and z > 1.
Envelope envelope_remark1(const NBParams& params, double z);

struct EnvelopeReport {
  std::int64_t k = 0;
  double z = 0.0;
  double value = 0.0;
  double envelope = 0.0;
  double slack = 0.0;  // envelope - |value|
  std::string envelope_name;

  bool passed() const;
};

/// Every applicable envelope check at (z, k): the two global envelopes and, for
/// z > 1, k >= 1, the strike-dependent branch and the refined difference envelope.
std::vector<EnvelopeReport> check_envelopes(const SteinSolution& solution, std::int64_t k);

struct SeriesInequality {
  bool applicable = false;
  double partial_sum = 0.0;
  double closed_form = 0.0;
  /// (closed_form - partial_sum) / max(1, |closed_form|).
  double slack = 0.0;
};

/// Partial sums (n_terms terms) of the five rising-factorial series used by the
/// g_z envelopes, against their closed-form majorants:
///   (i)   sum_{j>=1} [(r+k)...(r+j+k-1)] / [k...(j+k-1)] q^j        <= p^{-(r+1)} - 1,            k >= 1
///   (ii)  sum_{j>=1} [(r+k)...(r+j+k-1)] / [(k+1)...(j+k)] q^j      <= (p^{-r} - 1)/(rq) - 1,     k >= 1
///   (iii) sum_{j>=2} [(r+k+1)...(r+j+k-1)] / [(k+1)...(j+k-1)] q^j  <= (p^{-(r+1)} - 1)/r - q,    k >= 1
///   (iv)  sum_{j>=1} [(r+k+1)...(r+j+k)] / [k...(j+k-1)] q^j        <= (p^{-(r+2)} - 1)/((r+1)q) - 1, k >= 2
///   (v)   sum_{j>=1} [(r+k)...(r+j+k-1)] / [k...(j+k)] q^j          <= (p^{-r} - 1)/(r(r+1)q^2) - 1/2, k >= 2
std::array<SeriesInequality, 5> verify_appendix_series(const NBParams& params, std::int64_t k,
                                                       std::size_t n_terms);

}  // namespace nbcall

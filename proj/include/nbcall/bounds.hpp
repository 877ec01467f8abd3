#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbcall/dependency.hpp"
#include "nbcall/discrete_dist.hpp"
#include "nbcall/nb_core.hpp"

namespace nbcall {

enum class MatchingMode { MeanGivenR, MeanAndVariance, Explicit };

std::string_view to_string(MatchingMode mode);

struct NamedValue {
  std::string name;
  double value = 0.0;
};

/// One evaluated error bound on |E[(V - z)^+] - E[(N_{r,p} - z)^+]|.
///
/// bound_value = prefactor * structural_term, where the prefactor is the
/// envelope on |Delta g_z| (uniform: 2p^{-(r+1)} - p^{-1}; non-uniform:
/// theta_{r,p,z}) and the structural term depends only on the law of V.
struct BoundReport {
  NBParams matched;
  MatchingMode mode = MatchingMode::MeanGivenR;
  std::string bound_name;
  double prefactor = 0.0;
  double structural_term = 0.0;
  double bound_value = 0.0;
  /// Set for non-uniform reports.
  std::optional<double> z;
  /// Additive allowance for truncated input distributions (already scaled by the prefactor).
  double truncation_error = 0.0;
  std::vector<NamedValue> comparison;
  std::vector<NamedValue> details;
  std::optional<double> true_error;
  std::vector<std::string> warnings;

  bool uniform() const noexcept { return !z.has_value(); }
};

/// 2 p^{-(r+1)} - p^{-1}.
double uniform_prefactor(const NBParams& params);

/// Same structural term with the theta_{r,p,z} prefactor (requires z > 1).
BoundReport to_nonuniform(const BoundReport& uniform, double z);

/// Locally dependent sum, NB matched on the mean for the given r:
///   U_J = sum_i [p E(zeta_i) E(zeta_{A_i}) + q E(zeta_i zeta_{A_i}) + E(zeta_i (zeta_{A_i} - 1))].
BoundReport theorem1_mean(const DependencyModel& model, double r);

/// Locally dependent sum, NB matched on mean and variance; the structural term
/// combines the four smoothing expectations with D(V | .) by enumeration.
BoundReport theorem1_meanvar(const DependencyModel& model);

/// Bernoulli summands with pair probabilities, mean matched for the given r:
///   U = sum_i [(1+q) sum_{j in A_i} p_{i,j} + p_i (p sum_{j in A_i} p_j - 1)].
/// Individual summands may be negative; only a negative total is clamped to 0.
BoundReport corollary2(std::span<const double> marginals, const PairwiseBernoulli& pairs,
                       std::span<const IndexSet> neighborhoods, double r);

/// Independent summands, mean matched for the given r:
///   U* = sum_i sum_{k>=1} k |(p E(zeta_i) + q k) P(zeta_i = k) - (k+1) P(zeta_i = k+1)|.
BoundReport theorem2_mean(std::span<const DiscreteDist> marginals, double r, const SeriesControl& ctl = {});

/// Independent summands, matched on mean and variance:
///   U* = sqrt(2/pi) (1/4 + sum_j delta_j - delta*)^{-1/2}
///        { sum_i E(zeta_i) |p E(zeta_i)^2 + q E(zeta_i^2) - E(zeta_i (zeta_i - 1))|
///          + sum_i sum_{k>=2} k(k-1)/2 |(p E(zeta_i) + q k) P(zeta_i = k) - (k+1) P(zeta_i = k+1)| }
/// with delta_j = min(1/2, 1 - d_TV(zeta_j, zeta_j + 1)) and delta* = max_j delta_j.
BoundReport theorem2_meanvar(std::span<const DiscreteDist> marginals, const SeriesControl& ctl = {});

/// (2p^{-(r+1)} - p^{-1}) sum_i p_i (1 - p q_i) with p = r / (r + sum_i p_i).
double remark_bernoulli_nb(std::span<const double> p, double r);

/// (2 e^lambda - 1) sum_i p_i^2 with lambda = sum_i p_i.
double remark_bernoulli_poisson(std::span<const double> p);

enum class GeometricMatching { Mean, MeanVariance };

struct GeometricOptions {
  /// r used for mean matching; defaults to the number of summands.
  std::optional<double> r;
  /// Treat q_i > 1/2 as an error instead of a warning.
  bool strict_q_range = false;
};

/// Independent geometric summands P(zeta_i = k) = q_i^k p_i:
///   mean:    (2p^{-(r+1)} - p^{-1}) sum_i |p - p_i| q_i / p_i^2
///   meanvar: 3 (2p^{-(r+1)} - p^{-1}) sqrt(2/pi) (sum_j q_j - 1/4)^{-1/2} sum_i |p - p_i| q_i^2 / p_i^3
double remark_geometric_nb(std::span<const double> q, GeometricMatching mode, const GeometricOptions& options = {},
                           std::vector<std::string>* warnings = nullptr);

/// (2 e^lambda - 1) sum_i (8 - 7 p_i) q_i^2 / p_i^3 with lambda = sum_i q_i / p_i.
double remark_geometric_poisson(std::span<const double> q);

/// Locally dependent Bernoulli comparison:
///   (2 e^lambda - 1) sum_i [sum_{j in A_i \ {i}} p_{i,j} + sum_{j in A_i} p_i p_j], lambda = sum_i p_i.
double poisson_local_bound(std::span<const double> marginals, const PairwiseBernoulli& pairs,
                           std::span<const IndexSet> neighborhoods);

}  // namespace nbcall

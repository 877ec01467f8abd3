#pragma once

#include <vector>

#include "nbcall/certified.hpp"
#include "nbcall/dependency.hpp"
#include "nbcall/discrete_dist.hpp"
#include "nbcall/nb_core.hpp"

namespace nbcall {

/// E[(X - z)^+] summed over the represented table. The truncated tail adds at
/// most E[X 1_D] (since (k - z)^+ <= k), which is reported as the error.
Certified exact_call_expectation(const DiscreteDist& dist, double z);

struct ErrorPoint {
  double z = 0.0;
  Certified call;     // exact E[(V - z)^+]
  SeriesResult nb_call;  // E[(N - z)^+]
  /// |call - nb_call| with error = call.error + nb_call.tail_bound plus a
  /// 64-ulp rounding allowance on |call| + |nb_call|.
  Certified true_error;
};

struct OracleResult {
  DiscreteDist dist_V;
  NBParams params;
  std::vector<ErrorPoint> points;

  /// Largest true error over the grid, together with the error attached to it.
  Certified max_error() const;
};

/// Half-integer grid 0, 0.5, ..., up to mean + 6 sd (inclusive of the last step past it).
std::vector<double> default_z_grid(const DiscreteDist& dist);

OracleResult true_error_profile(const DependencyModel& model, const NBParams& params,
                                const std::vector<double>& z_grid, const SeriesControl& ctl = {});
OracleResult true_error_profile(const DiscreteDist& dist_V, const NBParams& params,
                                const std::vector<double>& z_grid, const SeriesControl& ctl = {});

}  // namespace nbcall

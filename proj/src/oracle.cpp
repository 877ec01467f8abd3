#include "nbcall/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbcall/errors.hpp"

namespace nbcall {

namespace {
constexpr double kRoundingUlps = 64.0;
}  // namespace

Certified exact_call_expectation(const DiscreteDist& dist, double z) {
  require_strike(z);
  const auto pmf = dist.pmf();
  const auto first = static_cast<std::size_t>(std::floor(z)) + 1;
  double sum = 0.0;
  double comp = 0.0;  // Kahan compensation; long tables of tiny terms are common
  for (std::size_t k = first; k < pmf.size(); ++k) {
    const double term = (static_cast<double>(k) - z) * pmf[k] - comp;
    const double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
  }
  return {sum, dist.tail().first_moment};
}

Certified OracleResult::max_error() const {
  Certified best;
  for (const auto& pt : points) {
    if (pt.true_error.value >= best.value) best = pt.true_error;
  }
  return best;
}

std::vector<double> default_z_grid(const DiscreteDist& dist) {
  const double top = dist.mean() + 6.0 * std::sqrt(std::max(0.0, dist.variance()));
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double z = 0.5 * i;
    grid.push_back(z);
    if (z >= top) break;
  }
  return grid;
}

OracleResult true_error_profile(const DiscreteDist& dist_V, const NBParams& params,
                                const std::vector<double>& z_grid, const SeriesControl& ctl) {
  OracleResult out{dist_V, params, {}};
  out.points.reserve(z_grid.size());
  for (double z : z_grid) {
    ErrorPoint pt;
    pt.z = z;
    pt.call = exact_call_expectation(dist_V, z);
    pt.nb_call = nb_call_expectation(params, z, ctl);
    // Both sides carry summation rounding on top of their truncation bounds.
    const double rounding = kRoundingUlps * std::numeric_limits<double>::epsilon() *
                            (std::abs(pt.call.value) + std::abs(pt.nb_call.value));
    pt.true_error = {std::abs(pt.call.value - pt.nb_call.value),
                     pt.call.error + pt.nb_call.tail_bound + rounding};
    out.points.push_back(pt);
  }
  return out;
}

OracleResult true_error_profile(const DependencyModel& model, const NBParams& params,
                                const std::vector<double>& z_grid, const SeriesControl& ctl) {
  return true_error_profile(exact_sum_distribution(model), params, z_grid, ctl);
}

}  // namespace nbcall

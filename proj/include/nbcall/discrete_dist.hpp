#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nbcall/nb_core.hpp"

namespace nbcall {

/// Upper bounds on what a truncated pmf leaves out. If D is the event that
/// the represented table does not account for an outcome, these bound
/// P(D), E[X 1_D], E[X^2 1_D] and E[X^3 1_D].
struct TailCertificate {
  double mass = 0.0;
  double first_moment = 0.0;
  double second_moment = 0.0;
  double third_moment = 0.0;
};

/// Probability mass sequence on {0, ..., size()-1} with a tail certificate.
/// Entries are exact for finite supports and lower bounds after truncation.
class DiscreteDist {
 public:
  DiscreteDist() : pmf_{1.0} {}
  explicit DiscreteDist(std::vector<double> pmf, TailCertificate tail = {});

  static DiscreteDist point_mass(std::size_t k);
  static DiscreteDist bernoulli(double p);
  /// Uniform on {0, ..., max_value}.
  static DiscreteDist uniform(std::size_t max_value);
  /// P(X = k) = q^k (1 - q), truncated once the tail mass and the first three
  /// tail moments all drop below tail_tol.
  static DiscreteDist geometric(double q, double tail_tol = 1e-14);
  static DiscreteDist negative_binomial(const NBParams& params, double tail_tol = 1e-14);

  std::span<const double> pmf() const noexcept { return pmf_; }
  std::size_t size() const noexcept { return pmf_.size(); }
  double operator[](std::ptrdiff_t k) const noexcept {
    return k >= 0 && static_cast<std::size_t>(k) < pmf_.size() ? pmf_[static_cast<std::size_t>(k)] : 0.0;
  }
  const TailCertificate& tail() const noexcept { return tail_; }
  bool truncated() const noexcept { return tail_.mass > 0.0; }

  double represented_mass() const;
  /// Raw moment E[X^order] over the represented table only.
  double moment(int order) const;
  double mean() const { return moment(1); }
  double variance() const;
  /// E[X] and E[X^2] including the tail certificate (upper bounds).
  double mean_upper() const { return moment(1) + tail_.first_moment; }
  double second_moment_upper() const { return moment(2) + tail_.second_moment; }
  double third_moment_upper() const { return moment(3) + tail_.third_moment; }

 private:
  std::vector<double> pmf_;
  TailCertificate tail_;
};

DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b);

/// Convolution of all inputs via a balanced pairwise tree with fixed merge order.
DiscreteDist convolve_all(std::span<const DiscreteDist> parts);

}  // namespace nbcall

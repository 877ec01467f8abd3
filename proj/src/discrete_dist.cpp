#include "nbcall/discrete_dist.hpp"

#include <cmath>
#include <string>

#include "nbcall/errors.hpp"

namespace nbcall {

namespace {

// Tail certificate for a sequence whose ratio P(m+1)/P(m) stays below `ratio`
// (< 1) for every m >= last_index, given P(last_index) = last_pmf.
TailCertificate ratio_tail(double last_pmf, std::size_t last_index, double ratio) {
  const double k = static_cast<double>(last_index);
  const double next = last_pmf * ratio;
  const double growth1 = ratio * (k + 2.0) / (k + 1.0);
  const double growth2 = growth1 * (k + 2.0) / (k + 1.0);
  const double growth3 = growth2 * (k + 2.0) / (k + 1.0);
  TailCertificate t;
  t.mass = next / (1.0 - ratio);
  t.first_moment = growth1 < 1.0 ? (k + 1.0) * next / (1.0 - growth1) : INFINITY;
  t.second_moment = growth2 < 1.0 ? (k + 1.0) * (k + 1.0) * next / (1.0 - growth2) : INFINITY;
  t.third_moment = growth3 < 1.0 ? (k + 1.0) * (k + 1.0) * (k + 1.0) * next / (1.0 - growth3) : INFINITY;
  return t;
}

bool below(const TailCertificate& t, double tol) {
  return t.mass < tol && t.first_moment < tol && t.second_moment < tol && t.third_moment < tol;
}

}  // namespace

DiscreteDist::DiscreteDist(std::vector<double> pmf, TailCertificate tail)
    : pmf_(std::move(pmf)), tail_(tail) {
  if (pmf_.empty()) {
    throw DomainError("a distribution needs at least one support point");
  }
  double total = 0.0;
  for (double v : pmf_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw DomainError("pmf entries must be finite and non-negative");
    }
    total += v;
  }
  if (tail_.mass < 0.0 || tail_.first_moment < 0.0 || tail_.second_moment < 0.0 || tail_.third_moment < 0.0) {
    throw DomainError("tail certificate entries must be non-negative");
  }
  if (total > 1.0 + 1e-10 || total + tail_.mass < 1.0 - 1e-10) {
    throw DomainError("pmf mass " + std::to_string(total) + " with tail bound " +
                      std::to_string(tail_.mass) + " does not account for total probability 1");
  }
}

DiscreteDist DiscreteDist::point_mass(std::size_t k) {
  std::vector<double> pmf(k + 1, 0.0);
  pmf[k] = 1.0;
  return DiscreteDist(std::move(pmf));
}

DiscreteDist DiscreteDist::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("Bernoulli probability must lie in [0,1]");
  }
  return DiscreteDist({1.0 - p, p});
}

DiscreteDist DiscreteDist::uniform(std::size_t max_value) {
  return DiscreteDist(std::vector<double>(max_value + 1, 1.0 / static_cast<double>(max_value + 1)));
}

DiscreteDist DiscreteDist::geometric(double q, double tail_tol) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw DomainError("geometric failure probability must lie in [0,1)");
  }
  if (q == 0.0) {
    return point_mass(0);
  }
  const double p = 1.0 - q;
  std::vector<double> pmf{p};
  for (;;) {
    const TailCertificate t = ratio_tail(pmf.back(), pmf.size() - 1, q);
    if (below(t, tail_tol)) {
      return DiscreteDist(std::move(pmf), t);
    }
    pmf.push_back(pmf.back() * q);
  }
}

DiscreteDist DiscreteDist::negative_binomial(const NBParams& params, double tail_tol) {
  std::vector<double> pmf{nb_pmf(params, 0)};
  for (std::size_t k = 0;; ++k) {
    const double kd = static_cast<double>(k);
    const double ratio = params.q * (params.r + kd) / (kd + 1.0);
    const double sup_ratio = params.r > 1.0 ? ratio : params.q;
    if (sup_ratio < 1.0 && pmf.size() > 1) {
      const TailCertificate t = ratio_tail(pmf.back(), k, sup_ratio);
      if (below(t, tail_tol)) {
        return DiscreteDist(std::move(pmf), t);
      }
    }
    pmf.push_back(nb_pmf(params, static_cast<std::int64_t>(k + 1)));
  }
}

double DiscreteDist::represented_mass() const {
  double total = 0.0;
  for (double v : pmf_) total += v;
  return total;
}

double DiscreteDist::moment(int order) const {
  double total = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    total += std::pow(static_cast<double>(k), order) * pmf_[k];
  }
  return total;
}

double DiscreteDist::variance() const {
  const double m = mean();
  return moment(2) - m * m;
}

DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b) {
  const auto pa = a.pmf();
  const auto pb = b.pmf();
  std::vector<double> out(pa.size() + pb.size() - 1, 0.0);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i] == 0.0) continue;
    for (std::size_t j = 0; j < pb.size(); ++j) {
      out[i + j] += pa[i] * pb[j];
    }
  }
  // Dropped outcomes D = {X beyond a's table} u {Y beyond b's table}.
  // E[(X+Y) 1_D] <= E[X 1_Dx] + E[X] P(Dy) + E[Y 1_Dy] + E[Y] P(Dx), and
  // (X+Y)^2 <= 2X^2 + 2Y^2 and (X+Y)^3 <= 4X^3 + 4Y^3 give the higher analogues.
  const TailCertificate& ta = a.tail();
  const TailCertificate& tb = b.tail();
  TailCertificate t;
  t.mass = ta.mass + tb.mass;
  if (t.mass > 0.0) {
    t.first_moment = ta.first_moment + a.mean_upper() * tb.mass + tb.first_moment + b.mean_upper() * ta.mass;
    t.second_moment = 2.0 * (ta.second_moment + a.second_moment_upper() * tb.mass + tb.second_moment +
                             b.second_moment_upper() * ta.mass);
    t.third_moment = 4.0 * (ta.third_moment + a.third_moment_upper() * tb.mass + tb.third_moment +
                            b.third_moment_upper() * ta.mass);
  }
  // Accumulated rounding can push the mass marginally above 1.
  double total = 0.0;
  for (double v : out) total += v;
  if (total > 1.0) {
    for (double& v : out) v /= total;
  }
  return DiscreteDist(std::move(out), t);
}

DiscreteDist convolve_all(std::span<const DiscreteDist> parts) {
  if (parts.empty()) {
    return DiscreteDist::point_mass(0);
  }
  std::vector<DiscreteDist> level(parts.begin(), parts.end());
  while (level.size() > 1) {
    std::vector<DiscreteDist> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      next.push_back(convolve(level[i], level[i + 1]));
    }
    if (level.size() % 2 == 1) {
      next.push_back(std::move(level.back()));
    }
    level = std::move(next);
  }
  return std::move(level.front());
}

}  // namespace nbcall

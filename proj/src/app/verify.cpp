#include "nbcall/app/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "nbcall/bounds.hpp"
#include "nbcall/dependency.hpp"
#include "nbcall/oracle.hpp"
#include "nbcall/stein.hpp"

namespace nbcall::app {

using nlohmann::json;

namespace {

class Sweep {
 public:
  explicit Sweep(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  bool coin() { return integer(0, 1) == 1; }

 private:
  std::mt19937_64 eng_;
};

// Tracks the smallest (worst) value of each named metric.
void track_min(json& metrics, const std::string& name, double v) {
  if (!metrics.contains(name) || v < metrics[name].get<double>()) metrics[name] = v;
}
void track_max(json& metrics, const std::string& name, double v) {
  if (!metrics.contains(name) || v > metrics[name].get<double>()) metrics[name] = v;
}

json params_json(const NBParams& p) { return {{"r", p.r}, {"p", p.p}}; }

NBParams random_params(Sweep& s) { return NBParams::make(s.uniform(1.0, 30.0), s.uniform(0.3, 0.98)); }

void run_lemmas(SuiteResult& res, Sweep& s, std::size_t budget) {
  constexpr std::int64_t kMaxK = 60;
  for (std::size_t c = 0; c < budget; ++c) {
    const NBParams params = random_params(s);
    const double mean = params.r * params.q / params.p;
    const double z = s.uniform(0.0, 3.0 * mean);
    const SteinSolution g(params, z);
    const double e = g.call_expectation().value;
    ++res.cases;
    for (std::int64_t k = 0; k <= kMaxK; ++k) {
      const double kd = static_cast<double>(k);
      const double up = params.q * (params.r + kd) * g(k + 1);
      const double down = kd * g(k);
      const double rhs = call_payoff(kd, z) - e;
      const double scale = std::max({1.0, std::abs(rhs), std::abs(up), std::abs(down)});
      const double residual = std::abs(up - down - rhs) / scale;
      ++res.checks;
      track_max(res.metrics, "stein_relative_residual", residual);
      if (!(residual < 1e-9)) {
        res.failures.push_back({"stein-residual", {{"params", params_json(params)}, {"z", z}, {"k", k},
                                                   {"residual", residual}}});
      }
      for (const auto& rep : check_envelopes(g, k)) {
        ++res.checks;
        const double rel = rep.slack / std::max(1.0, rep.envelope);
        track_min(res.metrics, "slack/" + rep.envelope_name, std::isfinite(rel) ? rel : 1.0);
        if (!rep.passed()) {
          res.failures.push_back({rep.envelope_name, {{"params", params_json(params)}, {"z", z}, {"k", k},
                                                      {"value", rep.value}, {"envelope", rep.envelope}}});
        }
      }
    }
  }
}

void run_appendix(SuiteResult& res, Sweep& s, std::size_t budget) {
  for (std::size_t c = 0; c < budget; ++c) {
    const NBParams params = random_params(s);
    const double mean = params.r * params.q / params.p;
    const double z = s.uniform(0.0, 3.0 * mean);
    const std::int64_t k = s.integer(1, 60);
    ++res.cases;

    const CallBoundCheck call = verify_call_expectation_bounds(params, z);
    res.checks += call.second_bound ? 2 : 1;
    track_min(res.metrics, "call_mean_bound_slack", call.mean_slack / std::max(1.0, call.mean_bound));
    if (call.second_slack) {
      track_min(res.metrics, "call_second_bound_slack", *call.second_slack / std::max(1.0, *call.second_bound));
    }
    if (!call.passed) {
      res.failures.push_back({"call-expectation-bounds", {{"params", params_json(params)}, {"z", z},
                                                          {"expectation", call.expectation}}});
    }

    const auto series = verify_appendix_series(params, k, 1000);
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (!series[i].applicable) continue;
      ++res.checks;
      const std::string name = "series-" + std::to_string(i + 1);
      track_min(res.metrics, name + "_slack", series[i].slack);
      if (!(series[i].slack >= -1e-10)) {
        res.failures.push_back({name, {{"params", params_json(params)}, {"k", k},
                                       {"partial_sum", series[i].partial_sum},
                                       {"closed_form", series[i].closed_form}}});
      }
    }
  }
}

// One random independent portfolio: Bernoulli or geometric, n <= 10.
struct RandomPortfolio {
  bool geometric = false;
  std::vector<double> probs;
  std::vector<DiscreteDist> dists;
  double r = 2.0;
};

RandomPortfolio random_portfolio(Sweep& s) {
  RandomPortfolio pf;
  pf.geometric = s.coin();
  const auto n = static_cast<std::size_t>(s.integer(1, 10));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.uniform(0.01, pf.geometric ? 0.5 : 0.6);
    pf.probs.push_back(x);
    pf.dists.push_back(pf.geometric ? DiscreteDist::geometric(x) : DiscreteDist::bernoulli(x));
  }
  pf.r = s.uniform(1.05, 3.0 * static_cast<double>(n) + 2.0);
  return pf;
}

json portfolio_json(const RandomPortfolio& pf) {
  return {{"kind", pf.geometric ? "geometric" : "bernoulli"}, {"params", pf.probs}, {"r", pf.r}};
}

void check_dominance(SuiteResult& res, const RandomPortfolio& pf, const BoundReport& uniform,
                     const OracleResult& oracle, const std::string& label) {
  for (const auto& pt : oracle.points) {
    // The exact error is at least true_error.value - true_error.error.
    const double err_low = pt.true_error.value - pt.true_error.error;
    const double ub = uniform.bound_value + uniform.truncation_error;
    ++res.checks;
    track_min(res.metrics, label + "/uniform_slack", ub - err_low);
    if (!(ub >= err_low - 1e-9)) {
      res.failures.push_back({label + "/uniform", {{"portfolio", portfolio_json(pf)}, {"z", pt.z},
                                                   {"bound", ub}, {"true_error", pt.true_error.value}}});
    }
    if (pt.z > 1.0) {
      const BoundReport nu = to_nonuniform(uniform, pt.z);
      const double nub = nu.bound_value + nu.truncation_error;
      ++res.checks;
      track_min(res.metrics, label + "/nonuniform_slack", nub - err_low);
      if (!(nub >= err_low - 1e-9)) {
        res.failures.push_back({label + "/non-uniform", {{"portfolio", portfolio_json(pf)}, {"z", pt.z},
                                                         {"bound", nub}, {"true_error", pt.true_error.value}}});
      }
    }
  }
}

void run_dominance(SuiteResult& res, Sweep& s, std::size_t budget) {
  for (std::size_t c = 0; c < budget; ++c) {
    const RandomPortfolio pf = random_portfolio(s);
    ++res.cases;
    const DiscreteDist v = convolve_all(pf.dists);
    const auto grid = default_z_grid(v);

    const BoundReport mean = theorem2_mean(pf.dists, pf.r);
    check_dominance(res, pf, mean, true_error_profile(v, mean.matched, grid), "theorem2-mean");

    if (pf.geometric) {
      const BoundReport mv = theorem2_meanvar(pf.dists);
      check_dominance(res, pf, mv, true_error_profile(v, mv.matched, grid), "theorem2-meanvar");
    }
  }
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

void run_identities(SuiteResult& res, Sweep& s, std::size_t budget) {
  for (std::size_t c = 0; c < budget; ++c) {
    ++res.cases;
    const auto n = static_cast<std::size_t>(s.integer(1, 30));
    const double r = s.uniform(1.05, 3.0 * static_cast<double>(n) + 2.0);

    std::vector<double> p(n);
    std::vector<DiscreteDist> bern;
    for (auto& x : p) {
      x = s.uniform(0.001, 0.9);
      bern.push_back(DiscreteDist::bernoulli(x));
    }
    auto record = [&](const std::string& name, double general, double closed) {
      ++res.checks;
      const double rel = std::abs(general - closed) / std::max({std::abs(general), std::abs(closed), 1e-300});
      track_max(res.metrics, name + "_relative_gap", rel);
      if (!close_rel(general, closed, 1e-10)) {
        res.failures.push_back({name, {{"n", n}, {"r", r}, {"general", general}, {"closed_form", closed}}});
      }
    };

    record("theorem2-mean=bernoulli-remark", theorem2_mean(bern, r).bound_value, remark_bernoulli_nb(p, r));

    const std::vector<IndexSet> singletons = Neighborhoods::independent(n).A;
    const PairwiseBernoulli pairs{p, {}};
    record("corollary2(A_i={i})=bernoulli-remark", corollary2(p, pairs, singletons, r).bound_value,
           remark_bernoulli_nb(p, r));
    record("theorem1-mean=corollary2",
           theorem1_mean(DependencyModel::independent(bern), r).bound_value,
           corollary2(p, pairs, singletons, r).bound_value);

    std::vector<double> q(n);
    std::vector<DiscreteDist> geo;
    for (auto& x : q) {
      x = s.uniform(0.01, 0.5);
      geo.push_back(DiscreteDist::geometric(x));
    }
    GeometricOptions opts;
    opts.r = r;
    record("theorem2-mean=geometric-remark", theorem2_mean(geo, r).bound_value,
           remark_geometric_nb(q, GeometricMatching::Mean, opts));
  }
}

}  // namespace

json SuiteResult::to_json() const {
  json failures_json = json::array();
  for (const auto& f : failures) failures_json.push_back({{"check", f.check}, {"detail", f.detail}});
  return {{"suite", suite},   {"seed", seed},         {"cases", cases}, {"checks", checks},
          {"passed", passed()}, {"metrics", metrics}, {"failures", failures_json}};
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lemmas", "appendix", "dominance", "identities"};
  return names;
}

std::size_t default_budget(const std::string& suite) {
  if (suite == "dominance") return 50;
  if (suite == "identities") return 100;
  return 1000;
}

SuiteResult run_suite(const std::string& suite, std::uint64_t seed, std::size_t budget) {
  SuiteResult res;
  res.suite = suite;
  res.seed = seed;
  Sweep sweep(seed);
  if (suite == "lemmas") {
    run_lemmas(res, sweep, budget);
  } else if (suite == "appendix") {
    run_appendix(res, sweep, budget);
  } else if (suite == "dominance") {
    run_dominance(res, sweep, budget);
  } else if (suite == "identities") {
    run_identities(res, sweep, budget);
  } else {
    throw std::invalid_argument("unknown suite '" + suite + "'");
  }
  return res;
}

}  // namespace nbcall::app

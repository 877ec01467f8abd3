#include "nbcall/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nbcall/app/verify.hpp"
#include "nbcall/errors.hpp"
#include "nbcall/oracle.hpp"
#include "nbcall/stein.hpp"

namespace nbcall::app {

using nlohmann::json;

namespace {

json named_values(const std::vector<NamedValue>& values) {
  json out = json::object();
  for (const auto& v : values) out[v.name] = v.value;
  return out;
}

double sum_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

// Mean-mode r: the config's r, else the number of summands.
double mean_mode_r(const ModelConfig& cfg) {
  const double r = cfg.nb.r.value_or(static_cast<double>(cfg.size()));
  if (!(r > 1.0)) {
    throw ConfigError("/nb/r", "the default r = n needs n >= 2; set nb.r > 1 explicitly");
  }
  return r;
}

// Oracle pass over the exact law of V: attaches true errors to each report and
// flags any bound below the certified lower end of the true error.
bool attach_oracle(json& doc, std::vector<BoundReport>& reports, const DiscreteDist& v,
                   const std::vector<double>& grid, const SeriesControl& ctl) {
  bool ok = true;
  json oracle = json::array();
  for (auto& rep : reports) {
    const OracleResult prof = true_error_profile(v, rep.matched, grid, ctl);
    json points = json::array();
    double worst = 0.0;
    bool rep_ok = true;
    for (const auto& pt : prof.points) {
      const double low = pt.true_error.value - pt.true_error.error;
      double bound = rep.bound_value + rep.truncation_error;
      if (!rep.uniform()) {
        // Non-uniform reports hold only at their own strike.
        if (pt.z != *rep.z) continue;
      }
      rep_ok = rep_ok && bound >= low - 1e-9;
      worst = std::max(worst, pt.true_error.value);
      points.push_back({{"z", pt.z},
                        {"call_exact", pt.call.value},
                        {"call_nb", pt.nb_call.value},
                        {"true_error", pt.true_error.value},
                        {"error_certificate", pt.true_error.error}});
    }
    if (!rep.uniform() && points.empty()) {
      // The strike is off the grid; evaluate it directly.
      const OracleResult at = true_error_profile(v, rep.matched, {*rep.z}, ctl);
      const auto& pt = at.points.front();
      worst = pt.true_error.value;
      rep_ok = rep.bound_value + rep.truncation_error >= pt.true_error.value - pt.true_error.error - 1e-9;
      points.push_back({{"z", pt.z},
                        {"call_exact", pt.call.value},
                        {"call_nb", pt.nb_call.value},
                        {"true_error", pt.true_error.value},
                        {"error_certificate", pt.true_error.error}});
    }
    rep.true_error = worst;
    ok = ok && rep_ok;
    oracle.push_back({{"bound_name", rep.bound_name}, {"dominance", rep_ok}, {"points", points}});
  }
  doc["oracle"] = oracle;
  return ok;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError(path, "cannot open output file for writing");
  return f;
}

// Writes via --out when given, else to the supplied stream.
template <class Fn>
void emit(const CommonOptions& opts, std::ostream& out, Fn&& fn) {
  if (opts.out) {
    std::ofstream f = open_output(*opts.out);
    fn(f);
    f.flush();
    if (!f) throw ConfigError(*opts.out, "write failed");
  } else {
    fn(out);
  }
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"error", kind}, {"message", message}};
}

// Shared exception-to-exit-code mapping for commands.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const InfeasibleError& e) {
    json j = error_json("infeasible", e.what());
    j["condition"] = e.condition();
    err << j.dump(2) << "\n";
  } catch (const ConfigError& e) {
    json j = error_json("config", e.what());
    j["path"] = e.path();
    err << j.dump(2) << "\n";
  } catch (const DomainError& e) {
    err << error_json("domain", e.what()).dump(2) << "\n";
  } catch (const UnsupportedLawError& e) {
    err << error_json("unsupported", e.what()).dump(2) << "\n";
  } catch (const SizeLimitError& e) {
    err << error_json("size-limit", e.what()).dump(2) << "\n";
  } catch (const ConvergenceError& e) {
    err << error_json("convergence", e.what()).dump(2) << "\n";
  }
  return kExitUsage;
}

}  // namespace

std::vector<double> table1_q() {
  static constexpr double kBlock[] = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  std::vector<double> q;
  q.reserve(75);
  for (int i = 1; i <= 75; ++i) q.push_back(kBlock[std::min((i - 1) / 10, 5)]);
  return q;
}

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<Table2Row> table2(const Table2Options& options) {
  const std::vector<double> all_q = table1_q();
  std::vector<Table2Row> rows;
  for (int n : options.n_values) {
    if (n < 1 || n > static_cast<int>(all_q.size())) {
      throw DomainError("table rows need 1 <= n <= 75, got " + std::to_string(n));
    }
    const std::vector<double> q(all_q.begin(), all_q.begin() + n);
    Table2Row row;
    row.n = n;
    row.poisson = remark_geometric_poisson(q);
    row.nb_mean = remark_geometric_nb(q, GeometricMatching::Mean);
    row.nb_meanvar = remark_geometric_nb(q, GeometricMatching::MeanVariance);
    if (options.bernoulli_p) {
      const auto& user = *options.bernoulli_p;
      std::vector<double> p;
      if (user.size() == 1) {
        p.assign(static_cast<std::size_t>(n), user.front());
      } else if (user.size() >= static_cast<std::size_t>(n)) {
        p.assign(user.begin(), user.begin() + n);
      } else {
        throw DomainError("--bernoulli-p needs one value or at least n values");
      }
      row.bernoulli_poisson = remark_bernoulli_poisson(p);
      row.bernoulli_nb = n > 1 ? std::optional(remark_bernoulli_nb(p, n)) : std::nullopt;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_table2(std::ostream& out, const std::vector<Table2Row>& rows, Format format, bool bernoulli_supplied) {
  if (format == Format::Csv) {
    if (bernoulli_supplied) {
      out << "# bernoulli columns use user-supplied p_i with r = n; they are not the reference portfolio\n";
    }
    out << "n,geometric_poisson,geometric_nb_mean,geometric_nb_meanvar";
    if (bernoulli_supplied) out << ",bernoulli_poisson,bernoulli_nb";
    out << "\n";
    for (const auto& r : rows) {
      out << r.n << "," << format6(r.poisson) << "," << format6(r.nb_mean) << "," << format6(r.nb_meanvar);
      if (bernoulli_supplied) {
        out << "," << (r.bernoulli_poisson ? format6(*r.bernoulli_poisson) : "")
            << "," << (r.bernoulli_nb ? format6(*r.bernoulli_nb) : "");
      }
      out << "\n";
    }
    return;
  }
  json doc = {{"schema_version", kSchemaVersion}, {"table", "geometric-comparison"}};
  json jrows = json::array();
  for (const auto& r : rows) {
    json row = {{"n", r.n}, {"geometric_poisson", r.poisson}, {"geometric_nb_mean", r.nb_mean},
                {"geometric_nb_meanvar", r.nb_meanvar}};
    if (r.bernoulli_poisson) row["bernoulli_poisson"] = *r.bernoulli_poisson;
    if (r.bernoulli_nb) row["bernoulli_nb"] = *r.bernoulli_nb;
    jrows.push_back(row);
  }
  doc["rows"] = jrows;
  if (bernoulli_supplied) {
    doc["provenance"] = "bernoulli columns use user-supplied p_i with r = n";
  }
  out << doc.dump(2) << "\n";
}

json to_json(const NBParams& params) { return {{"r", params.r}, {"p", params.p}, {"q", params.q}}; }

json to_json(const BoundReport& report) {
  json j = {{"bound_name", report.bound_name},
            {"matching_mode", std::string(to_string(report.mode))},
            {"matched_params", to_json(report.matched)},
            {"prefactor", report.prefactor},
            {"structural_term", report.structural_term},
            {"bound_value", report.bound_value},
            {"truncation_error", report.truncation_error},
            {"uniform", report.uniform()}};
  if (report.z) j["z"] = *report.z;
  if (!report.comparison.empty()) j["comparison"] = named_values(report.comparison);
  if (!report.details.empty()) j["details"] = named_values(report.details);
  if (report.true_error) j["true_error"] = *report.true_error;
  if (!report.warnings.empty()) j["warnings"] = report.warnings;
  return j;
}

json to_json(const TrancheReport& rep) {
  auto strike = [](const StrikeEstimate& s) {
    json j = {{"loss_level", s.loss_level}, {"strike", s.strike}, {"exact_zero", s.exact_zero}};
    if (!s.exact_zero) {
      j["call_estimate"] = s.call.value;
      j["call_error"] = s.call.error;
      j["bound_used"] = s.bound_used;
    }
    return j;
  };
  json j = {{"id", rep.tranche.id},
            {"attachment", rep.tranche.attachment},
            {"detachment", rep.tranche.detachment},
            {"z_star", rep.attach.strike},
            {"attach", strike(rep.attach)},
            {"detach", strike(rep.detach)},
            {"expected_loss", rep.expected_loss.value},
            {"expected_loss_error", rep.expected_loss.error},
            {"nb_bound", to_json(rep.nb_bound)},
            {"poisson_bound", rep.poisson_bound}};
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  if (rep.oracle) {
    j["oracle_expected_loss"] = rep.oracle->value;
    j["oracle_error"] = rep.oracle->error;
    j["contains_oracle"] = rep.expected_loss.contains(rep.oracle->value, rep.oracle->error + 1e-12);
  }
  return j;
}

BoundOutcome evaluate_bounds(const ModelConfig& cfg, std::optional<double> z, const SeriesControl& ctl) {
  json doc = {{"schema_version", kSchemaVersion},
              {"command", "bound"},
              {"kind", std::string(to_string(cfg.kind))},
              {"n", cfg.size()},
              {"nb_mode", std::string(to_string(cfg.nb.mode))}};
  std::vector<BoundReport> reports;
  std::vector<std::string> notes;
  json comparison = json::object();
  std::optional<DiscreteDist> exact;

  const bool mean_mode = cfg.nb.mode != NbMode::MeanVar;
  std::optional<NBParams> explicit_params;
  if (cfg.nb.mode == NbMode::Explicit) explicit_params = NBParams::make(*cfg.nb.r, *cfg.nb.p);

  switch (cfg.kind) {
    case ModelKind::Bernoulli:
    case ModelKind::Geometric: {
      const auto dists = build_marginals(cfg);
      exact = convolve_all(dists);
      if (cfg.kind == ModelKind::Bernoulli) {
        comparison["poisson"] = remark_bernoulli_poisson(cfg.probs);
      } else {
        comparison["poisson"] = remark_geometric_poisson(cfg.probs);
      }
      if (mean_mode) {
        const double r = explicit_params ? explicit_params->r : mean_mode_r(cfg);
        BoundReport rep = theorem2_mean(dists, r, ctl);
        if (cfg.kind == ModelKind::Bernoulli) {
          rep.comparison.push_back({"closed_form_bernoulli", remark_bernoulli_nb(cfg.probs, r)});
        } else {
          GeometricOptions o;
          o.r = r;
          std::vector<std::string> w;
          rep.comparison.push_back({"closed_form_geometric", remark_geometric_nb(cfg.probs, GeometricMatching::Mean, o, &w)});
          rep.warnings.insert(rep.warnings.end(), w.begin(), w.end());
        }
        reports.push_back(std::move(rep));
      } else {
        BoundReport rep = theorem2_meanvar(dists, ctl);
        if (cfg.kind == ModelKind::Geometric) {
          const double sq = sum_of(cfg.probs);
          if (sq > 0.25) {
            std::vector<std::string> w;
            const double printed = remark_geometric_nb(cfg.probs, GeometricMatching::MeanVariance, {}, &w);
            rep.comparison.push_back({"closed_form_geometric", printed});
            rep.details.push_back({"smoothing_constant_remark", std::sqrt(2.0 / std::numbers::pi) / std::sqrt(sq - 0.25)});
          } else {
            notes.push_back("closed-form geometric meanvar bound needs sum q_i > 1/4");
          }
        }
        reports.push_back(std::move(rep));
      }
      break;
    }
    case ModelKind::Table: {
      const DependencyModel model = build_model(cfg);
      exact = exact_sum_distribution(model);
      if (mean_mode) {
        reports.push_back(theorem1_mean(model, explicit_params ? explicit_params->r : mean_mode_r(cfg)));
      } else {
        reports.push_back(theorem1_meanvar(model));
      }
      break;
    }
    case ModelKind::Pairwise: {
      if (!mean_mode) {
        throw UnsupportedLawError("pairwise inputs fix only two moments per pair; use nb.mode = \"mean\"");
      }
      const DependencyModel model = build_model(cfg);
      const auto& A = model.neighborhoods().A;
      const double r = explicit_params ? explicit_params->r : mean_mode_r(cfg);
      BoundReport rep = corollary2(cfg.pairwise.marginals, cfg.pairwise, A, r);
      rep.comparison.push_back({"theorem1_mean", theorem1_mean(model, r).bound_value});
      reports.push_back(std::move(rep));
      comparison["poisson"] = poisson_local_bound(cfg.pairwise.marginals, cfg.pairwise, A);
      notes.push_back("pairwise inputs do not fix a joint law; no oracle comparison");
      break;
    }
  }

  // Explicit parameters are only admissible when they are the matched ones:
  // the bounds are stated for moment-matched NB laws.
  if (explicit_params) {
    const NBParams& m = reports.front().matched;
    if (std::abs(m.p - explicit_params->p) > 1e-9) {
      throw DomainError("explicit (r, p) is not mean matched: matched p for this r is " +
                        std::to_string(m.p) + "; the bounds only hold for matched parameters");
    }
  }

  if (z) {
    require_strike(*z);
    if (*z > 1.0) {
      reports.push_back(to_nonuniform(reports.front(), *z));
    } else {
      notes.push_back("the non-uniform bound needs z > 1");
    }
  }

  bool ok = true;
  if (exact) {
    const std::vector<double> grid = cfg.z_grid.empty() ? default_z_grid(*exact) : cfg.z_grid;
    ok = attach_oracle(doc, reports, *exact, grid, ctl);
  }
  json jreports = json::array();
  for (const auto& rep : reports) jreports.push_back(to_json(rep));
  doc["reports"] = jreports;
  doc["comparison"] = comparison;
  if (!notes.empty()) doc["notes"] = notes;
  doc["dominance"] = exact ? json(ok) : json(nullptr);
  return {doc, ok};
}

CdoOutcome evaluate_cdo(const ModelConfig& cfg) {
  const Portfolio pf = build_portfolio(cfg);
  pf.validate();
  if (pf.tranches.empty()) throw ConfigError("/tranches", "the cdo command needs at least one tranche");
  if (cfg.nb.mode == NbMode::MeanVar) {
    throw InfeasibleError("default counts have Var(V) <= E(V) for independent or weakly dependent Bernoulli "
                          "portfolios; tranche estimates use mean matching",
                          "Var(V) > E(V)");
  }
  CdoOutcome out;
  const double r = mean_mode_r(cfg);
  const double mu = pf.expected_defaults();
  if (mu > 0.0) {
    out.params = match_mean(mu, r);
    if (cfg.nb.p && std::abs(*cfg.nb.p - out.params.p) > 1e-9) {
      throw DomainError("explicit (r, p) is not mean matched; tranche estimates need matched parameters");
    }
  } else {
    out.params = NBParams::make(r, 0.5);
  }
  out.tranches = all_tranches(pf, out.params);
  out.comparison = compare_bounds(pf, r);

  const auto defaults = portfolio_loss_distribution(pf);
  out.oracle_available = defaults.has_value();
  if (defaults) {
    for (auto& t : out.tranches) {
      t.oracle = exact_tranche_loss(pf, t.tranche, *defaults);
      const bool inside = t.expected_loss.contains(t.oracle->value, t.oracle->error + 1e-12);
      out.containment_ok = out.containment_ok && inside;
    }
  }
  return out;
}

void write_cdo(std::ostream& out, const CdoOutcome& outcome, Format format) {
  if (format == Format::Csv) {
    out << "tranche,attachment,detachment,z_star,expected_loss,error,lower,upper,oracle,contains_oracle\n";
    for (const auto& t : outcome.tranches) {
      out << t.tranche.id << "," << format6(t.tranche.attachment) << "," << format6(t.tranche.detachment) << ","
          << format6(t.attach.strike) << "," << format6(t.expected_loss.value) << ","
          << format6(t.expected_loss.error) << "," << format6(t.expected_loss.lower()) << ","
          << format6(t.expected_loss.upper()) << ",";
      if (t.oracle) {
        out << format6(t.oracle->value) << ","
            << (t.expected_loss.contains(t.oracle->value, t.oracle->error + 1e-12) ? "true" : "false");
      } else {
        out << ",";
      }
      out << "\n";
    }
    out << "\nsetup,nb_bound,poisson_bound\n";
    for (const auto& c : outcome.comparison) {
      out << c.setup << "," << format6(c.nb_bound) << "," << format6(c.poisson_bound) << "\n";
    }
    return;
  }
  json doc = {{"schema_version", kSchemaVersion}, {"command", "cdo"}, {"matched_params", to_json(outcome.params)}};
  json tranches = json::array();
  for (const auto& t : outcome.tranches) tranches.push_back(to_json(t));
  doc["tranches"] = tranches;
  json cmp = json::array();
  for (const auto& c : outcome.comparison) {
    cmp.push_back({{"setup", c.setup}, {"nb_bound", c.nb_bound}, {"poisson_bound", c.poisson_bound}});
  }
  doc["comparison"] = cmp;
  doc["oracle_available"] = outcome.oracle_available;
  doc["containment"] = outcome.oracle_available ? json(outcome.containment_ok) : json(nullptr);
  out << doc.dump(2) << "\n";
}

int cmd_table2(const CommonOptions& opts, const Table2Options& t2, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto rows = table2(t2);
    emit(opts, out, [&](std::ostream& o) { write_table2(o, rows, opts.format, t2.bernoulli_p.has_value()); });
    return kExitOk;
  });
}

int cmd_bound(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!opts.config) throw ConfigError("--config", "the bound command needs a config file");
    const ModelConfig cfg = load_config(*opts.config);
    SeriesControl ctl;
    if (opts.tol) ctl.rel_tol = *opts.tol;
    ctl.validate();
    const BoundOutcome res = evaluate_bounds(cfg, opts.z, ctl);
    emit(opts, out, [&](std::ostream& o) {
      if (opts.format == Format::Csv) {
        o << "bound_name,matching_mode,r,p,prefactor,structural_term,bound_value,z,true_error\n";
        for (const auto& rep : res.report["reports"]) {
          o << rep["bound_name"].get<std::string>() << "," << rep["matching_mode"].get<std::string>() << ","
            << format6(rep["matched_params"]["r"].get<double>()) << ","
            << format6(rep["matched_params"]["p"].get<double>()) << "," << format6(rep["prefactor"].get<double>())
            << "," << format6(rep["structural_term"].get<double>()) << ","
            << format6(rep["bound_value"].get<double>()) << ","
            << (rep.contains("z") ? format6(rep["z"].get<double>()) : "") << ","
            << (rep.contains("true_error") ? format6(rep["true_error"].get<double>()) : "") << "\n";
        }
      } else {
        o << res.report.dump(2) << "\n";
      }
    });
    if (!res.dominance_ok) {
      err << "dominance check failed: a bound is below the oracle's true error\n";
      return kExitCheckFailed;
    }
    return kExitOk;
  });
}

int cmd_cdo(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!opts.config) throw ConfigError("--config", "the cdo command needs a config file");
    const ModelConfig cfg = load_config(*opts.config);
    const CdoOutcome res = evaluate_cdo(cfg);
    emit(opts, out, [&](std::ostream& o) { write_cdo(o, res, opts.format); });
    if (!res.containment_ok) {
      err << "containment check failed: an oracle tranche loss lies outside its certificate interval\n";
      return kExitCheckFailed;
    }
    return kExitOk;
  });
}

int cmd_verify(const CommonOptions& opts, const std::string& suite, std::size_t budget, std::ostream& out,
               std::ostream& err) {
  const auto& names = suite_names();
  std::vector<std::string> run;
  if (suite == "all") {
    run = names;
  } else if (std::find(names.begin(), names.end(), suite) != names.end()) {
    run.push_back(suite);
  } else {
    err << error_json("usage", "unknown suite '" + suite + "'; expected lemmas, appendix, dominance, identities or all")
               .dump(2)
        << "\n";
    return kExitUsage;
  }
  return guarded(err, [&] {
    json doc = {{"schema_version", kSchemaVersion}, {"command", "verify"}};
    json suites = json::array();
    bool ok = true;
    for (const auto& name : run) {
      const SuiteResult res = run_suite(name, opts.seed, budget > 0 ? budget : default_budget(name));
      ok = ok && res.passed();
      suites.push_back(res.to_json());
    }
    doc["suites"] = suites;
    doc["passed"] = ok;
    emit(opts, out, [&](std::ostream& o) { o << doc.dump(2) << "\n"; });
    return ok ? kExitOk : kExitCheckFailed;
  });
}

}  // namespace nbcall::app

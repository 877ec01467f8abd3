#include "nbcall/app/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nbcall/errors.hpp"

namespace nbcall::app {

using nlohmann::json;

namespace {

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto a : allowed) known = known || it.key() == a;
    if (!known) throw ConfigError(child(path, it.key()), "unknown key");
  }
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError(child(path, key), "required field is missing");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

std::size_t index(const json& v, const std::string& path, std::size_t n) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer index");
  const auto i = v.get<std::int64_t>();
  if (i < 0 || static_cast<std::size_t>(i) >= n) {
    throw ConfigError(path, "index " + std::to_string(i) + " outside 0.." + std::to_string(n - 1));
  }
  return static_cast<std::size_t>(i);
}

std::vector<double> number_array(const json& v, const std::string& path, double lo, double hi, bool hi_open) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = number(v[i], child(path, i));
    if (x < lo || x > hi || (hi_open && x == hi)) {
      std::ostringstream os;
      os << "value " << x << " outside [" << lo << ", " << hi << (hi_open ? ")" : "]");
      throw ConfigError(child(path, i), os.str());
    }
    out.push_back(x);
  }
  return out;
}

IndexSet index_array(const json& v, const std::string& path, std::size_t n) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of indices");
  IndexSet out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(index(v[i], child(path, i), n));
  return out;
}

std::vector<IndexSet> index_sets(const json& v, const std::string& path, std::size_t n) {
  if (!v.is_array() || v.size() != n) {
    throw ConfigError(path, "expected an array of " + std::to_string(n) + " index arrays");
  }
  std::vector<IndexSet> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(index_array(v[i], child(path, i), n));
  return out;
}

Neighborhoods parse_neighborhoods(const json& v, const std::string& path, std::size_t n) {
  reject_unknown(v, path, {"A", "B", "chain"});
  if (v.contains("chain")) {
    if (v.contains("A") || v.contains("B")) throw ConfigError(path, "use either chain or explicit A/B, not both");
    const auto& c = v.at("chain");
    if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
      throw ConfigError(child(path, "chain"), "expected a non-negative integer radius");
    }
    return Neighborhoods::chain(n, static_cast<std::size_t>(c.get<std::int64_t>()));
  }
  Neighborhoods nb;
  nb.A = index_sets(require(v, path, "A"), child(path, "A"), n);
  nb.B = v.contains("B") ? index_sets(v.at("B"), child(path, "B"), n) : nb.A;
  try {
    nb.normalize_and_validate(n);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return nb;
}

NbSpec parse_nb(const json& v, const std::string& path) {
  reject_unknown(v, path, {"mode", "r", "p"});
  NbSpec nb;
  if (v.contains("mode")) {
    const auto& m = v.at("mode");
    const std::string s = m.is_string() ? m.get<std::string>() : "";
    if (s == "mean") {
      nb.mode = NbMode::Mean;
    } else if (s == "meanvar") {
      nb.mode = NbMode::MeanVar;
    } else if (s == "explicit") {
      nb.mode = NbMode::Explicit;
    } else {
      throw ConfigError(child(path, "mode"), "expected \"mean\", \"meanvar\" or \"explicit\"");
    }
  }
  if (v.contains("r")) {
    nb.r = number(v.at("r"), child(path, "r"));
    if (!(*nb.r > 1.0)) throw ConfigError(child(path, "r"), "bounds require r > 1");
  }
  if (v.contains("p")) {
    nb.p = number(v.at("p"), child(path, "p"));
    if (!(*nb.p > 0.0 && *nb.p < 1.0)) throw ConfigError(child(path, "p"), "expected p in (0,1)");
  }
  if (nb.mode == NbMode::Explicit && (!nb.r || !nb.p)) {
    throw ConfigError(path, "explicit mode needs both r and p");
  }
  if (nb.mode == NbMode::MeanVar && (nb.r || nb.p)) {
    throw ConfigError(path, "meanvar mode solves r and p; do not set them");
  }
  if (nb.mode == NbMode::Mean && nb.p) {
    throw ConfigError(child(path, "p"), "mean mode solves p from the mean; set only r");
  }
  return nb;
}

TableLaw parse_table(const json& v, const std::string& path) {
  const auto& outcomes = require(v, path, "outcomes");
  const std::string opath = child(path, "outcomes");
  if (!outcomes.is_array() || outcomes.empty()) throw ConfigError(opath, "expected a non-empty array");
  TableLaw law;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const std::string ipath = child(opath, i);
    reject_unknown(outcomes[i], ipath, {"values", "prob"});
    const auto& values = require(outcomes[i], ipath, "values");
    if (!values.is_array() || values.empty()) throw ConfigError(child(ipath, "values"), "expected a non-empty array");
    JointOutcome o;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const auto& x = values[j];
      if (!x.is_number_integer() || x.get<std::int64_t>() < 0 || x.get<std::int64_t>() > INT32_MAX) {
        throw ConfigError(child(child(ipath, "values"), j), "expected a non-negative integer");
      }
      o.values.push_back(static_cast<std::int32_t>(x.get<std::int64_t>()));
    }
    if (i > 0 && o.values.size() != law.dimension) {
      throw ConfigError(child(ipath, "values"), "every outcome needs " + std::to_string(law.dimension) + " values");
    }
    law.dimension = o.values.size();
    o.prob = number(require(outcomes[i], ipath, "prob"), child(ipath, "prob"));
    if (o.prob < 0.0) throw ConfigError(child(ipath, "prob"), "probabilities must be non-negative");
    law.outcomes.push_back(std::move(o));
  }
  return law;
}

std::vector<Tranche> parse_tranches(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of tranches");
  std::vector<Tranche> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string tpath = child(path, i);
    reject_unknown(v[i], tpath, {"id", "attachment", "detachment"});
    Tranche t;
    t.id = v[i].contains("id") && v[i].at("id").is_string() ? v[i].at("id").get<std::string>()
                                                            : "T" + std::to_string(i + 1);
    t.attachment = number(require(v[i], tpath, "attachment"), child(tpath, "attachment"));
    t.detachment = number(require(v[i], tpath, "detachment"), child(tpath, "detachment"));
    if (!(t.attachment >= 0.0 && t.attachment < t.detachment && t.detachment <= 1.0)) {
      throw ConfigError(tpath, "needs 0 <= attachment < detachment <= 1");
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::size_t ModelConfig::size() const {
  switch (kind) {
    case ModelKind::Table:
      return table.dimension;
    case ModelKind::Pairwise:
      return pairwise.marginals.size();
    default:
      return probs.size();
  }
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Bernoulli:
      return "bernoulli";
    case ModelKind::Geometric:
      return "geometric";
    case ModelKind::Table:
      return "table";
    case ModelKind::Pairwise:
      return "pairwise";
  }
  return "unknown";
}

std::string_view to_string(NbMode mode) {
  switch (mode) {
    case NbMode::Mean:
      return "mean";
    case NbMode::MeanVar:
      return "meanvar";
    case NbMode::Explicit:
      return "explicit";
  }
  return "unknown";
}

ModelConfig parse_config(const json& doc) {
  const std::string root;
  reject_unknown(doc, root, {"kind", "params", "neighborhoods", "nb", "z_grid", "tranches", "recovery"});
  ModelConfig cfg;

  const auto& kind = require(doc, root, "kind");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  const auto& params = require(doc, root, "params");
  const std::string ppath = "/params";
  if (k == "bernoulli") {
    cfg.kind = ModelKind::Bernoulli;
    reject_unknown(params, ppath, {"p"});
    cfg.probs = number_array(require(params, ppath, "p"), "/params/p", 0.0, 1.0, false);
  } else if (k == "geometric") {
    cfg.kind = ModelKind::Geometric;
    reject_unknown(params, ppath, {"q"});
    cfg.probs = number_array(require(params, ppath, "q"), "/params/q", 0.0, 1.0, true);
  } else if (k == "table") {
    cfg.kind = ModelKind::Table;
    reject_unknown(params, ppath, {"outcomes"});
    cfg.table = parse_table(params, ppath);
  } else if (k == "pairwise") {
    cfg.kind = ModelKind::Pairwise;
    reject_unknown(params, ppath, {"p", "pairs"});
    cfg.pairwise.marginals = number_array(require(params, ppath, "p"), "/params/p", 0.0, 1.0, false);
    const std::size_t n = cfg.pairwise.marginals.size();
    if (params.contains("pairs")) {
      const auto& pairs = params.at("pairs");
      if (!pairs.is_array()) throw ConfigError("/params/pairs", "expected an array of [i, j, p_ij]");
      for (std::size_t t = 0; t < pairs.size(); ++t) {
        const std::string tpath = child("/params/pairs", t);
        if (!pairs[t].is_array() || pairs[t].size() != 3) throw ConfigError(tpath, "expected [i, j, p_ij]");
        const auto i = index(pairs[t][0], child(tpath, 0), n);
        const auto j = index(pairs[t][1], child(tpath, 1), n);
        if (i == j) throw ConfigError(tpath, "a pair needs two distinct indices");
        const double pij = number(pairs[t][2], child(tpath, 2));
        if (!(pij >= 0.0 && pij <= std::min(cfg.pairwise.marginals[i], cfg.pairwise.marginals[j]))) {
          throw ConfigError(child(tpath, 2), "p_ij must lie in [0, min(p_i, p_j)]");
        }
        cfg.pairwise.set_pair(i, j, pij);
      }
    }
  } else {
    throw ConfigError("/kind", "expected \"bernoulli\", \"geometric\", \"table\" or \"pairwise\"");
  }
  if (cfg.size() == 0) throw ConfigError(ppath, "the model needs at least one variable");

  if (doc.contains("neighborhoods")) {
    cfg.neighborhoods = parse_neighborhoods(doc.at("neighborhoods"), "/neighborhoods", cfg.size());
  }
  if (doc.contains("nb")) cfg.nb = parse_nb(doc.at("nb"), "/nb");
  if (doc.contains("z_grid")) {
    cfg.z_grid = number_array(doc.at("z_grid"), "/z_grid", 0.0, INFINITY, true);
  }
  if (doc.contains("tranches")) cfg.tranches = parse_tranches(doc.at("tranches"), "/tranches");
  if (doc.contains("recovery")) {
    cfg.recovery = number(doc.at("recovery"), "/recovery");
    if (!(cfg.recovery >= 0.0 && cfg.recovery <= 1.0)) throw ConfigError("/recovery", "expected R in [0,1]");
  }
  if (!cfg.tranches.empty() && cfg.kind != ModelKind::Bernoulli && cfg.kind != ModelKind::Pairwise) {
    throw ConfigError("/tranches", "tranches need a bernoulli or pairwise default model");
  }
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::vector<DiscreteDist> build_marginals(const ModelConfig& cfg) {
  std::vector<DiscreteDist> out;
  switch (cfg.kind) {
    case ModelKind::Bernoulli:
      for (double p : cfg.probs) out.push_back(DiscreteDist::bernoulli(p));
      break;
    case ModelKind::Geometric:
      for (double q : cfg.probs) out.push_back(DiscreteDist::geometric(q));
      break;
    default:
      throw UnsupportedLawError("per-index marginals are only defined for independent kinds");
  }
  return out;
}

DependencyModel build_model(const ModelConfig& cfg) {
  const std::size_t n = cfg.size();
  switch (cfg.kind) {
    case ModelKind::Bernoulli:
    case ModelKind::Geometric:
      if (cfg.neighborhoods && !cfg.neighborhoods->is_independent()) {
        throw ConfigError("/neighborhoods", "bernoulli and geometric kinds are independent; use table or pairwise");
      }
      return DependencyModel::independent(build_marginals(cfg));
    case ModelKind::Table: {
      Neighborhoods nb;
      if (cfg.neighborhoods) {
        nb = *cfg.neighborhoods;
      } else {
        IndexSet all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        nb.A.assign(n, all);
        nb.B.assign(n, all);
      }
      return DependencyModel(cfg.table, std::move(nb));
    }
    case ModelKind::Pairwise:
      return DependencyModel(cfg.pairwise, cfg.neighborhoods.value_or(Neighborhoods::independent(n)));
  }
  throw UnsupportedLawError("unknown model kind");
}

Portfolio build_portfolio(const ModelConfig& cfg) {
  Portfolio pf;
  pf.recovery = cfg.recovery;
  pf.tranches = cfg.tranches;
  if (cfg.kind == ModelKind::Bernoulli) {
    pf.default_probs = cfg.probs;
  } else if (cfg.kind == ModelKind::Pairwise) {
    pf.default_probs = cfg.pairwise.marginals;
    const Neighborhoods nb = cfg.neighborhoods.value_or(Neighborhoods::independent(cfg.size()));
    // Validates pair placement against the neighborhoods.
    DependencyModel(cfg.pairwise, nb);
    pf.dependence = PairwiseDependence{nb.A, cfg.pairwise};
  } else {
    throw ConfigError("/kind", "CDO portfolios need a bernoulli or pairwise default model");
  }
  return pf;
}

}  // namespace nbcall::app

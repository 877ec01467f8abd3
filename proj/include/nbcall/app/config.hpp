#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbcall/cdo.hpp"
#include "nbcall/dependency.hpp"

namespace nbcall::app {

/// Schema violation; `path` is the JSON pointer of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class ModelKind { Bernoulli, Geometric, Table, Pairwise };

enum class NbMode { Mean, MeanVar, Explicit };

struct NbSpec {
  NbMode mode = NbMode::Mean;
  std::optional<double> r;
  std::optional<double> p;
};

/// A validated portfolio/model config.
///
///   {"kind": "bernoulli"|"geometric"|"table"|"pairwise",
///    "params": {...}, "neighborhoods": {...}, "nb": {...},
///    "z_grid": [...], "tranches": [...], "recovery": R}
///
/// params by kind: bernoulli {"p": [...]}; geometric {"q": [...]};
/// table {"outcomes": [{"values": [...], "prob": x}, ...]};
/// pairwise {"p": [...], "pairs": [[i, j, p_ij], ...]}.
/// neighborhoods: {"A": [[...]], "B": [[...]]} or {"chain": radius}. Indices are 0-based.
struct ModelConfig {
  ModelKind kind = ModelKind::Bernoulli;
  std::vector<double> probs;  // p_i (bernoulli, pairwise) or q_i (geometric)
  TableLaw table;
  PairwiseBernoulli pairwise;
  std::optional<Neighborhoods> neighborhoods;
  NbSpec nb;
  std::vector<double> z_grid;
  std::vector<Tranche> tranches;
  double recovery = 0.4;

  std::size_t size() const;
};

ModelConfig parse_config(const nlohmann::json& doc);
/// Reads and parses a file; I/O failures are reported as ConfigError with the path.
ModelConfig load_config(const std::string& path);

std::string_view to_string(ModelKind kind);
std::string_view to_string(NbMode mode);

/// The dependency model described by the config. Table configs without
/// neighborhoods get A_i = B_i = J; other kinds default to independence.
DependencyModel build_model(const ModelConfig& cfg);
/// Per-index marginals for independent kinds.
std::vector<DiscreteDist> build_marginals(const ModelConfig& cfg);
/// CDO view of a bernoulli or pairwise config.
Portfolio build_portfolio(const ModelConfig& cfg);

}  // namespace nbcall::app

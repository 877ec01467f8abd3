#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbcall/app/config.hpp"
#include "nbcall/bounds.hpp"
#include "nbcall/cdo.hpp"

namespace nbcall::app {

/// Process exit status contract.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

inline constexpr int kSchemaVersion = 1;

enum class Format { Csv, Json };

/// The 75 failure probabilities of the reference geometric portfolio:
/// 0.05 for indices 1-10, then 0.10, 0.15, 0.20, 0.25 per block of ten, and
/// 0.30 for 51-75.
std::vector<double> table1_q();

struct Table2Row {
  int n = 0;
  double poisson = 0.0;
  double nb_mean = 0.0;
  double nb_meanvar = 0.0;
  /// Filled only when Bernoulli probabilities are supplied by the user.
  std::optional<double> bernoulli_poisson;
  std::optional<double> bernoulli_nb;
};

struct Table2Options {
  std::vector<int> n_values{10, 20, 30, 40, 50, 60, 75};
  /// User Bernoulli probabilities; a single value is broadcast, otherwise the
  /// first n entries are used for row n.
  std::optional<std::vector<double>> bernoulli_p;
};

std::vector<Table2Row> table2(const Table2Options& options);
void write_table2(std::ostream& out, const std::vector<Table2Row>& rows, Format format, bool bernoulli_supplied);

/// Prints v with 6 significant digits, the precision used by every CSV table.
std::string format6(double v);

nlohmann::json to_json(const NBParams& params);
nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const TrancheReport& report);

struct BoundOutcome {
  nlohmann::json report;
  /// False when the oracle shows a bound below the true error.
  bool dominance_ok = true;
};

/// Evaluates every bound applicable to the config, plus the oracle profile
/// when an exact law of V is available.
BoundOutcome evaluate_bounds(const ModelConfig& cfg, std::optional<double> z, const SeriesControl& ctl = {});

struct CdoOutcome {
  std::vector<TrancheReport> tranches;
  std::vector<BoundComparison> comparison;
  NBParams params;
  bool containment_ok = true;
  bool oracle_available = false;
};

CdoOutcome evaluate_cdo(const ModelConfig& cfg);
void write_cdo(std::ostream& out, const CdoOutcome& outcome, Format format);

struct CommonOptions {
  std::optional<std::string> config;
  std::optional<std::string> out;
  Format format = Format::Json;
  std::uint64_t seed = 1;
  /// Relative tolerance for truncated series (default 1e-12).
  std::optional<double> tol;
  std::optional<double> z;
};

int cmd_table2(const CommonOptions& opts, const Table2Options& t2, std::ostream& out, std::ostream& err);
int cmd_bound(const CommonOptions& opts, std::ostream& out, std::ostream& err);
int cmd_cdo(const CommonOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const CommonOptions& opts, const std::string& suite, std::size_t budget, std::ostream& out,
               std::ostream& err);

}  // namespace nbcall::app

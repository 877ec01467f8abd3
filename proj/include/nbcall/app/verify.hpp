#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace nbcall::app {

struct VerifyFailure {
  std::string check;
  nlohmann::json detail;
};

struct SuiteResult {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t cases = 0;
  std::size_t checks = 0;
  std::vector<VerifyFailure> failures;
  /// Worst observed residuals and slacks, keyed by check name.
  nlohmann::json metrics = nlohmann::json::object();

  bool passed() const noexcept { return failures.empty(); }
  nlohmann::json to_json() const;
};

/// Names accepted by run_suite.
const std::vector<std::string>& suite_names();

/// Default case count per suite.
std::size_t default_budget(const std::string& suite);

/// Seeded property sweeps:
///   lemmas     Stein equation residual of g_z and the |g_z|, |Delta g_z|
///              envelopes, including the z-dependent ones
///   appendix   E[(N-z)^+] bounds and the five rising-factorial series
///   dominance  independent-sum bound versus the exact oracle error
///   identities closed-form specializations of the general bounds
/// Throws std::invalid_argument for an unknown suite name.
SuiteResult run_suite(const std::string& suite, std::uint64_t seed, std::size_t budget);

}  // namespace nbcall::app

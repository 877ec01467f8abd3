// nbcall: negative binomial approximation of call expectations, with error
// bounds certified against exact computation.

#include <iostream>

#include <CLI11.hpp>

#include "nbcall/app/commands.hpp"
#include "nbcall/app/verify.hpp"

namespace {

void add_common(CLI::App* cmd, nbcall::app::CommonOptions& opts, bool wants_config) {
  if (wants_config) cmd->add_option("--config", opts.config, "Model/portfolio JSON file")->required();
  cmd->add_option("--out", opts.out, "Write output to this file instead of stdout");
  cmd->add_option("--format", opts.format, "Output format: csv or json")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, nbcall::app::Format>{{"csv", nbcall::app::Format::Csv},
                                                      {"json", nbcall::app::Format::Json}},
          CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nbcall::app;

  CLI::App app{"Negative binomial approximation of E[(V - z)^+] with certified error bounds"};
  app.require_subcommand(1);

  CommonOptions opts;
  Table2Options t2;
  std::vector<double> bernoulli_p;
  std::string suite = "all";
  std::size_t budget = 0;

  auto* table = app.add_subcommand("table2", "Bound comparison for the reference geometric portfolio");
  add_common(table, opts, false);
  table->add_option("--n", t2.n_values, "Portfolio sizes (comma separated, 1..75)")->delimiter(',');
  table->add_option("--bernoulli-p", bernoulli_p,
                    "Bernoulli probabilities for the optional Bernoulli columns (one value is broadcast)")
      ->delimiter(',');

  auto* bound = app.add_subcommand("bound", "Evaluate every applicable bound for a model config");
  add_common(bound, opts, true);
  bound->add_option("--z", opts.z, "Strike for the additional non-uniform bound (needs z > 1)");
  bound->add_option("--tol", opts.tol, "Relative tolerance for truncated series");

  auto* cdo = app.add_subcommand("cdo", "Tranche expected losses with certificates");
  add_common(cdo, opts, true);

  auto* verify = app.add_subcommand("verify", "Run a seeded property suite");
  add_common(verify, opts, false);
  verify->add_option("--suite", suite, "lemmas, appendix, dominance, identities or all");
  verify->add_option("--seed", opts.seed, "Sweep seed");
  verify->add_option("--budget", budget, "Cases per suite (0 = suite default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (table->parsed()) {
    if (!bernoulli_p.empty()) t2.bernoulli_p = bernoulli_p;
    if (!opts.out && opts.format == Format::Json && table->count("--format") == 0) opts.format = Format::Csv;
    return cmd_table2(opts, t2, std::cout, std::cerr);
  }
  if (bound->parsed()) return cmd_bound(opts, std::cout, std::cerr);
  if (cdo->parsed()) return cmd_cdo(opts, std::cout, std::cerr);
  return cmd_verify(opts, suite, budget, std::cout, std::cerr);
}

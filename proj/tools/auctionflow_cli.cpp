#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "auctionflow/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = auctionflow::cli;
  cli::configure_logging_from_env();

  CLI::App app{"auctionflow: point-process auction simulation and bid optimization"};
  app.require_subcommand(1, 1);

  cli::Invocation inv;
  std::optional<std::uint64_t> seed;
  const char* descriptions[][2] = {
      {"gen", "Generate point patterns, count series, strata counts or landscapes"},
      {"diagnose", "Poisson-approximation bounds, moments and count diagnostics"},
      {"solve", "Optimal bid or action for one opportunity"},
      {"tune", "Tune the budget multiplier on a synthetic exponential landscape"},
      {"experiment", "Run a full experiment grid and write its tables"},
  };
  for (const auto& [name, text] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->add_option("--config", inv.config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "Override the config seed(s)");
    sub->add_option("--out", inv.output_dir, "Output directory");
    sub->add_option("--jobs", inv.jobs, "Parallel grid cells (experiment)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kDomainOrConfigError;
  }
  inv.subcommand = app.get_subcommands().front()->get_name();
  inv.seed_override = seed;
  return cli::dispatch(inv, std::cout);
}

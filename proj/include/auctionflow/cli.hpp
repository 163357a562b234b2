#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace auctionflow::cli {

enum ExitCode : int {
  kSuccess = 0,
  kDomainOrConfigError = 1,
  kNonConvergence = 2,
};

struct Invocation {
  std::string subcommand;  // gen | diagnose | solve | tune | experiment
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string output_dir;  // empty: the config's output_path, else "."
  unsigned jobs = 0;       // 0: keep the config value
};

/// Runs one subcommand. Primary results (the bid for `solve`, file paths for
/// the rest) go to `out`; diagnostics go through the logger. Every output
/// file is written to a temporary name and renamed into place, and nothing
/// is written before the config has been parsed and validated.
int dispatch(const Invocation& invocation, std::ostream& out);

/// Applies AUCTIONFLOW_LOG (trace, debug, info, warn, error, off).
void configure_logging_from_env();

}  // namespace auctionflow::cli

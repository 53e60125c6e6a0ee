#pragma once

// Subcommands of the stie_cli tool. Exit codes: 0 success, 2 configuration
// or usage error, 3 runtime or I/O error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stie/config.hpp"

namespace stie {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool svg = false;
};

/// Config with command-line overrides applied.
ExperimentConfig resolve(ExperimentConfig config, const CommandOptions& options);

/// Header block written at the top of every CSV: the resolved config as
/// compact JSON, the seed, the horizon and conditioning notes.
std::vector<std::pair<std::string, std::string>> csv_metadata(const ExperimentConfig& config,
                                                              const std::string& command);

/// Prints delay constants, coupling rates and the Gaussian strong-procedure
/// check; also writes theory.csv when an output directory is given.
void cmd_theory(const ExperimentConfig& config, const CommandOptions& options, std::ostream& out);

/// Writes trials.csv and metrics.csv (plus trials_<variant>.csv for the
/// comparison detectors in mode "all").
void cmd_simulate(const ExperimentConfig& config, const CommandOptions& options,
                  std::ostream& out);

/// Writes sweep.csv and the plot data files that apply to the swept
/// parameter. Throws ConfigError if the config has no sweep block.
void cmd_sweep(const ExperimentConfig& config, const CommandOptions& options, std::ostream& out);

/// Parses argv-style arguments (without the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stie

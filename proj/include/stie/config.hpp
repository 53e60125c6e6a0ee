#pragma once

// Experiment configuration: a JSON document with a fixed schema. Every key is
// checked; unknown keys and out-of-range values are ConfigErrors naming the
// offending field.
//
//   {
//     "scenario": {
//       "x": {"mu0": 1, "mu1": 0, "sigma2": 0.5},
//       "y": {"mu0": 1, "mu1": 0, "sigma2": 0.5},
//       "z": {"mu0": 1, "mu1": 0, "sigma2": 1.0},
//       "rho1": 0.05, "rho2": 0.05,
//       "horizon": 400,                          (optional)
//       "change1": "sampled" | "never",          (optional)
//       "change2": "sampled" | "never"           (optional)
//     },
//     "alpha": 0.001,
//     "n_trials": 10000,
//     "seed": 1,
//     "mode": "stie" | "private-only" | "no-exchange" | "all",
//     "threads": 1,                              (optional)
//     "sweep": {                                 (optional)
//       "parameter": "alpha" | "sigma_ratio" | "rho",
//       "values": [...],
//       "trials_per_point": 1000,
//       "alpha_grid": [...],                     (optional)
//       "seed_policy": "per-point" | "common",   (optional)
//       "compare_no_shared": true                (optional)
//     }
//   }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stie/models.hpp"
#include "stie/sim.hpp"

namespace stie {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct StreamConfig {
  double mu0 = 1.0;
  double mu1 = 0.0;
  double sigma2 = 1.0;

  friend bool operator==(const StreamConfig&, const StreamConfig&) = default;
};

enum class Mode { Stie, PrivateOnly, NoExchange, All };

const char* to_string(Mode m) noexcept;
std::vector<Variant> variants_for(Mode m);

struct SweepConfig {
  SweepParameter parameter = SweepParameter::Alpha;
  std::vector<double> values;
  std::uint64_t trials_per_point = 1000;
  std::vector<double> alpha_grid;
  SeedPolicy seed_policy = SeedPolicy::PerPoint;
  bool compare_no_shared = false;

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
  StreamConfig x;
  StreamConfig y;
  StreamConfig z;
  double rho1 = 0.05;
  double rho2 = 0.05;
  std::optional<Step> horizon;
  ChangePolicy change1 = ChangePolicy::Sampled;
  ChangePolicy change2 = ChangePolicy::Sampled;
  double alpha = 0.01;
  std::uint64_t n_trials = 1000;
  std::uint64_t seed = 1;
  Mode mode = Mode::Stie;
  unsigned threads = 1;
  std::optional<SweepConfig> sweep;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws ConfigError on any schema or range violation.
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Reads and parses a JSON file; unreadable files and syntax errors are
/// ConfigErrors on field "<file>".
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);

/// Scenario with the horizon resolved (explicit value or default_horizon).
StreamScenario make_scenario(const ExperimentConfig& config);
StreamScenario make_scenario(const ExperimentConfig& config, double alpha);

}  // namespace stie

#pragma once

// Monte Carlo harness: paired trials of the STIE rule and its comparison
// detectors, metric estimation, exponent fits and parameter sweeps.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stie/models.hpp"
#include "stie/stopping.hpp"
#include "stie/theory.hpp"

namespace stie {

enum class Variant {
  Stie,         // composite rule with one-bit exchange
  PrivateOnly,  // SRP on the private stream alone
  NoExchange,   // posterior test on (private, shared) without exchange
};

const char* to_string(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view name) noexcept;

enum class WhichFirst { First, Second, Tie, Neither };

const char* to_string(WhichFirst w) noexcept;

/// Stopping times of both subsystems for one variant on one trial.
struct VariantStops {
  std::optional<Step> nu1;
  std::optional<Step> nu2;
  /// nu_1 > nu_2 (subsystem 1's joint test lost the race); for the
  /// comparison detectors this is just nu1 > nu2 with "none" as infinity.
  bool preempted_1 = false;
  bool preempted_2 = false;
};

struct TrialOutcome {
  std::uint64_t trial_index = 0;
  Step k1 = 0;
  Step k2 = 0;
  std::optional<Step> nu_bar_1;
  std::optional<Step> nu_bar_2;
  WhichFirst which_first = WhichFirst::Neither;
  bool false_alarm_1 = false;
  bool false_alarm_2 = false;
  bool coupling_event_1 = false;  // nu1 <= nu2 and k2 <= nu1 < k1
  bool coupling_event_2 = false;
  std::optional<Step> delay_1;  // nu1 - k1 when nu1 >= k1
  std::optional<Step> delay_2;
  bool preempted_1 = false;
  bool preempted_2 = false;
};

/// Derives the event flags of one trial from change and stopping times.
TrialOutcome classify_trial(std::uint64_t trial_index, Step k1, Step k2, const VariantStops& stops);

/// Variant stopping times of one simulated trial.
struct PairedTrial {
  Step k1 = 0;
  Step k2 = 0;
  std::optional<VariantStops> stie;
  std::optional<VariantStops> private_only;
  std::optional<VariantStops> no_exchange;

  const std::optional<VariantStops>& get(Variant v) const noexcept;
};

/// Runs the requested detectors on one seeded realization until every
/// detector has stopped or the horizon is reached.
PairedTrial simulate_trial(const StreamScenario& scenario, const Threshold& threshold,
                           std::uint64_t seed, std::span<const Variant> variants);

struct TrialBatch {
  std::vector<Variant> variants;
  /// outcomes[i] belongs to variants[i]; each holds one entry per trial in
  /// trial-index order.
  std::vector<std::vector<TrialOutcome>> outcomes;

  const std::vector<TrialOutcome>& of(Variant v) const;
};

/// Trial i uses the stream seed derive_seed(seed, i), so it can be replayed
/// alone. Results do not depend on `threads` (0 means hardware concurrency).
/// Throws std::invalid_argument for n_trials == 0 or an empty variant list.
TrialBatch run_trials(const StreamScenario& scenario, const Threshold& threshold,
                      std::uint64_t n_trials, std::uint64_t seed,
                      std::span<const Variant> variants = {}, unsigned threads = 1);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  // 95%
  double ci_hi = 0.0;
};

/// Sample proportion with binomial standard error and exact
/// (Clopper-Pearson) 95% interval.
Estimate proportion_estimate(std::uint64_t successes, std::uint64_t n);

struct DelayMoments {
  std::uint64_t count = 0;
  std::optional<Estimate> m1;  // E[(nu - k) | nu >= k]
  std::optional<Estimate> m2;  // E[(nu - k)^2 | nu >= k]
};

struct AggregateMetrics {
  std::uint64_t n_trials = 0;
  Estimate fa_rate_1;
  Estimate fa_rate_2;
  Estimate xi_1;
  Estimate xi_2;
  Estimate delta_hat;  // P(nu_1 > nu_2)
  DelayMoments delay_1;
  DelayMoments delay_2;
  std::uint64_t censored_1 = 0;
  std::uint64_t censored_2 = 0;
  std::uint64_t censored_count = 0;  // trials with at least one censored detector
};

/// Throws std::invalid_argument for an empty outcome list.
AggregateMetrics aggregate(std::span<const TrialOutcome> outcomes);

struct ExponentFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;  // 95%, Student t with n - 2 dof
  double ci_hi = 0.0;
  std::size_t points_used = 0;
  std::vector<double> excluded_alphas;  // points with xi <= 0
};

/// Least-squares slope of log xi against log alpha. Throws
/// std::invalid_argument when fewer than three points have xi > 0.
ExponentFit fit_coupling_exponent(std::span<const std::pair<double, double>> alpha_xi);

/// ceil(log(1e6) / d_min) + ceil(5 max(L~1, L~2)): covers the change time
/// with probability 1 - 1e-6 plus five private-only delay constants.
Step default_horizon(const StreamScenario& scenario, double alpha);

enum class SweepParameter { Alpha, SigmaRatio, PriorRho };
enum class SeedPolicy { Common, PerPoint };

const char* to_string(SweepParameter p) noexcept;
const char* to_string(SeedPolicy p) noexcept;

struct SweepSpec {
  StreamScenario base;
  double alpha = 0.01;
  SweepParameter parameter = SweepParameter::Alpha;
  std::vector<double> values;
  std::uint64_t trials_per_point = 1000;
  std::uint64_t seed = 1;
  SeedPolicy seed_policy = SeedPolicy::PerPoint;
  bool compare_no_shared = false;
  /// When non-empty, a coupling exponent is fitted per grid point over these
  /// alphas.
  std::vector<double> exponent_alpha_grid;
  /// Recompute the horizon per point with default_horizon.
  bool auto_horizon = true;
  unsigned threads = 1;

  /// Throws std::invalid_argument if the grid is empty or
  /// trials_per_point < 100.
  void validate() const;
};

struct SweepRow {
  double value = 0.0;
  double alpha = 0.0;
  double sigma_ratio = 0.0;  // sigma2(Z) / sigma2(X) at this point
  Step horizon = 0;
  AggregateMetrics stie;
  std::optional<AggregateMetrics> no_shared;
  DelayConstants theory{};
  CouplingRate coupling{};
  double predicted_delay = 0.0;  // interpolated delay prediction at delta_hat
  std::vector<std::pair<double, double>> exponent_points;
  std::optional<ExponentFit> exponent;
};

/// Applies one swept value to a copy of the base scenario.
StreamScenario apply_sweep_value(const StreamScenario& base, SweepParameter parameter,
                                 double value);

std::vector<SweepRow> run_sweep(const SweepSpec& spec);

}  // namespace stie

#pragma once

// Threshold rules and the two-detector STIE state machine.
//
// Each subsystem runs a joint statistic (private + shared stream) and a
// private-only statistic from step 1. A detector in JOINT declares when its
// joint statistic reaches the threshold; the first declaration is sent to the
// peer as a single message, after which the peer decides on its private
// statistic alone. The composite stopping times are
//
//   nu_bar_1 = nu_1                  if nu_1 <= nu_2
//            = max(nu~_1, nu_2)      otherwise
//
// and symmetrically for subsystem 2; a tie stops both detectors.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "stie/models.hpp"
#include "stie/statistics.hpp"

namespace stie {

struct Threshold {
  double alpha;
  double log_b;  // log((1 - alpha) / alpha)
};

/// Throws std::invalid_argument unless 0 < alpha < 1.
Threshold make_threshold(double alpha);

inline bool crosses(const SrpState& s, const Threshold& t) noexcept {
  return s.log_lambda >= t.log_b;
}

/// First n with log Lambda_n >= log B over the given stream, or nullopt.
std::optional<Step> srp_stopping_time(std::span<const double> llrs, const GeometricPrior& prior,
                                      const Threshold& threshold);

enum class Phase { Joint, PrivateOnly, Stopped };

const char* to_string(Phase phase) noexcept;

struct SubsystemDetector {
  Phase phase = Phase::Joint;
  Step step = 0;
  SrpState joint_stat;
  SrpState private_stat;
  std::optional<Step> declared_at;
  std::optional<Step> peer_declared_at;
  /// First step at which the private statistic reached the threshold.
  std::optional<Step> private_crossed_at;

  static SubsystemDetector initial(const GeometricPrior& prior) {
    return SubsystemDetector{Phase::Joint, 0, SrpState::initial(prior), SrpState::initial(prior),
                             std::nullopt, std::nullopt, std::nullopt};
  }
};

struct ExchangeMessage {
  int sender;  // 1 or 2
  Step declared_at;

  friend bool operator==(const ExchangeMessage&, const ExchangeMessage&) = default;
};

/// Log-likelihood ratios of one step: X (private 1), Y (private 2), Z (shared).
struct StepEvidence {
  double private1;
  double private2;
  double shared;
};

struct StieStep {
  SubsystemDetector det1;
  SubsystemDetector det2;
  std::vector<ExchangeMessage> messages;
};

/// Advances both detectors by one step. Throws std::logic_error if the two
/// detectors are not at the same step index.
StieStep stie_step(const SubsystemDetector& det1, const SubsystemDetector& det2,
                   const StepEvidence& evidence, const Threshold& threshold);

struct PhaseTransition {
  Step step;
  int subsystem;
  Phase from;
  Phase to;

  friend bool operator==(const PhaseTransition&, const PhaseTransition&) = default;
};

struct StieTrialResult {
  std::optional<Step> nu_bar_1;
  std::optional<Step> nu_bar_2;
  /// Joint test of subsystem u lost the race (nu_u > nu_peer).
  bool preempted_1 = false;
  bool preempted_2 = false;
  std::vector<PhaseTransition> trace;
  std::vector<ExchangeMessage> messages;
};

/// Drives stie_step over equal-length llr streams. Throws
/// std::invalid_argument when the stream lengths differ.
StieTrialResult run_stie_trial(std::span<const double> llr_x, std::span<const double> llr_y,
                               std::span<const double> llr_z, const GeometricPrior& prior1,
                               const GeometricPrior& prior2, const Threshold& threshold);

/// Same, on materialized observation streams of a scenario.
StieTrialResult run_stie_trial(const ScenarioSample& sample, const StreamScenario& scenario,
                               const Threshold& threshold);

}  // namespace stie

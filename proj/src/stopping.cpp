#include "stie/stopping.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stie {

Threshold make_threshold(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("make_threshold: alpha must lie in (0, 1), got " +
                                std::to_string(alpha));
  }
  return Threshold{alpha, std::log1p(-alpha) - std::log(alpha)};
}

std::optional<Step> srp_stopping_time(std::span<const double> llrs, const GeometricPrior& prior,
                                      const Threshold& threshold) {
  SrpState s = SrpState::initial(prior);
  for (double r : llrs) {
    s = srp_update(s, r);
    if (crosses(s, threshold)) return s.n;
  }
  return std::nullopt;
}

const char* to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::Joint: return "joint";
    case Phase::PrivateOnly: return "private-only";
    case Phase::Stopped: return "stopped";
  }
  return "?";
}

namespace {

void advance(SubsystemDetector& det, double private_llr, double shared_llr,
             const Threshold& threshold) {
  ++det.step;
  if (det.phase == Phase::Stopped) return;
  det.joint_stat = srp_update(det.joint_stat, private_llr + shared_llr);
  det.private_stat = srp_update(det.private_stat, private_llr);
  if (!det.private_crossed_at && crosses(det.private_stat, threshold)) {
    det.private_crossed_at = det.step;
  }
}

bool wants_to_declare(const SubsystemDetector& det, const Threshold& threshold) {
  switch (det.phase) {
    case Phase::Joint: return crosses(det.joint_stat, threshold);
    // Any earlier private crossing counts: max(nu~, nu_peer).
    case Phase::PrivateOnly: return det.private_crossed_at.has_value();
    case Phase::Stopped: return false;
  }
  return false;
}

void declare(SubsystemDetector& det, int sender, std::vector<ExchangeMessage>& messages) {
  det.phase = Phase::Stopped;
  det.declared_at = det.step;
  messages.push_back(ExchangeMessage{sender, det.step});
}

}  // namespace

StieStep stie_step(const SubsystemDetector& det1, const SubsystemDetector& det2,
                   const StepEvidence& evidence, const Threshold& threshold) {
  if (det1.step != det2.step) {
    throw std::logic_error("stie_step: detectors at different steps (" +
                           std::to_string(det1.step) + " vs " + std::to_string(det2.step) + ")");
  }
  StieStep out{det1, det2, {}};
  advance(out.det1, evidence.private1, evidence.shared, threshold);
  advance(out.det2, evidence.private2, evidence.shared, threshold);

  const bool first = wants_to_declare(out.det1, threshold);
  const bool second = wants_to_declare(out.det2, threshold);
  if (first) declare(out.det1, 1, out.messages);
  if (second) declare(out.det2, 2, out.messages);

  // A declaration reaches a peer still in JOINT within the same step.
  auto notify = [&](SubsystemDetector& peer, Step when, int peer_id) {
    if (peer.phase != Phase::Joint) return;
    peer.phase = Phase::PrivateOnly;
    peer.peer_declared_at = when;
    if (wants_to_declare(peer, threshold)) declare(peer, peer_id, out.messages);
  };
  if (first && !second) notify(out.det2, out.det1.step, 2);
  if (second && !first) notify(out.det1, out.det2.step, 1);
  return out;
}

StieTrialResult run_stie_trial(std::span<const double> llr_x, std::span<const double> llr_y,
                               std::span<const double> llr_z, const GeometricPrior& prior1,
                               const GeometricPrior& prior2, const Threshold& threshold) {
  if (llr_x.size() != llr_y.size() || llr_x.size() != llr_z.size()) {
    throw std::invalid_argument("run_stie_trial: streams must have equal length");
  }
  StieTrialResult result;
  SubsystemDetector d1 = SubsystemDetector::initial(prior1);
  SubsystemDetector d2 = SubsystemDetector::initial(prior2);
  for (std::size_t i = 0; i < llr_x.size(); ++i) {
    if (d1.phase == Phase::Stopped && d2.phase == Phase::Stopped) break;
    StieStep next = stie_step(d1, d2, StepEvidence{llr_x[i], llr_y[i], llr_z[i]}, threshold);
    if (next.det1.phase != d1.phase) {
      result.trace.push_back({next.det1.step, 1, d1.phase, next.det1.phase});
    }
    if (next.det2.phase != d2.phase) {
      result.trace.push_back({next.det2.step, 2, d2.phase, next.det2.phase});
    }
    result.messages.insert(result.messages.end(), next.messages.begin(), next.messages.end());
    d1 = std::move(next.det1);
    d2 = std::move(next.det2);
  }
  result.nu_bar_1 = d1.declared_at;
  result.nu_bar_2 = d2.declared_at;
  result.preempted_1 = d1.peer_declared_at.has_value();
  result.preempted_2 = d2.peer_declared_at.has_value();
  return result;
}

StieTrialResult run_stie_trial(const ScenarioSample& sample, const StreamScenario& scenario,
                               const Threshold& threshold) {
  const std::size_t n = sample.x.size();
  std::vector<double> rx(n), ry(n), rz(n);
  for (std::size_t i = 0; i < n; ++i) {
    rx[i] = scenario.model_x.log_likelihood_ratio(sample.x[i]);
    ry[i] = scenario.model_y.log_likelihood_ratio(sample.y[i]);
    rz[i] = scenario.model_z.log_likelihood_ratio(sample.z[i]);
  }
  return run_stie_trial(rx, ry, rz, scenario.prior1, scenario.prior2, threshold);
}

}  // namespace stie

#pragma once

// Log-domain posterior-odds statistics.
//
//   SRP:          Lambda_n = Pi_n^{-1} sum_{k<=n} pi(k) exp(R_n^k),   Lambda_0 = 0
//   no exchange:  Lambda_n^noex = a_n / b_n, the posterior odds of
//                 {lambda1 <= n} given X and Z when Z switches at
//                 min(lambda1, lambda2).
//
// Everything is carried as a logarithm; Lambda = 0 is -infinity.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "stie/models.hpp"

namespace stie {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
inline double log_add_exp(double a, double b) noexcept {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  if (a == std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

/// log sum_i exp(v_i); -inf for an empty span.
double log_sum_exp(std::span<const double> values) noexcept;

/// Running cumulative log-likelihood ratio R_n^1 = sum_{i<=n} r_i.
struct LlrAccumulator {
  Step n = 0;
  double cum_llr = 0.0;

  void push(double r) noexcept {
    ++n;
    cum_llr += r;
  }
};

/// Prefix sums of a retained llr sequence; R_n^k = prefix(n) - prefix(k-1).
class LlrPrefix {
 public:
  explicit LlrPrefix(std::span<const double> llrs);

  Step size() const noexcept { return static_cast<Step>(prefix_.size()) - 1; }
  /// R_n^k for 1 <= k <= n + 1 (k = n + 1 is the empty sum).
  double segment(Step k, Step n) const;

 private:
  std::vector<double> prefix_;
};

/// SRP recursion state for one statistic.
struct SrpState {
  GeometricPrior prior;
  Step n = 0;
  double log_lambda = kNegInf;

  static SrpState initial(const GeometricPrior& prior) noexcept { return SrpState{prior}; }
};

/// Lambda_n = (Lambda_{n-1} + rho) exp(llr) / (1 - rho). For a joint statistic
/// pass r_n(X) + r_n(Z) as the increment.
SrpState srp_update(const SrpState& state, double llr_increment) noexcept;

/// log Lambda_n evaluated term by term from the sum definition. Quadratic in
/// the stream length; meant as a reference for the recursion.
/// Throws std::invalid_argument for an empty stream.
double srp_direct(std::span<const double> llrs, const GeometricPrior& prior);

/// Running aggregates of the no-exchange posterior odds for subsystem 1
/// (X private, Z shared; pass Y in place of X for subsystem 2).
///
/// With C^X, C^Z the cumulative llrs,
///   G_n   = sum_{j<=n} pi2(j) exp(-C^Z_{j-1})
///   A_n   = sum_{k<=n} pi1(k) exp(-C^X_{k-1}) [G_k + Pi2_k exp(-C^Z_{k-1})]
///   a_n   = exp(C^X_n + C^Z_n) A_n
///   b_n   = Pi1_n [Pi2_n + exp(C^Z_n) G_n]
/// The infinite sum over the peer change time is closed by the geometric
/// tail mass Pi2_k, so each step costs O(1).
struct NoExState {
  GeometricPrior prior1;
  GeometricPrior prior2;
  Step n = 0;
  double cum_x = 0.0;
  double cum_z = 0.0;
  double log_g = kNegInf;
  double log_a_sum = kNegInf;

  static NoExState initial(const GeometricPrior& own, const GeometricPrior& peer) noexcept {
    return NoExState{own, peer};
  }

  double log_a() const noexcept { return cum_x + cum_z + log_a_sum; }
  double log_b() const noexcept {
    return prior1.log_tail(n) + log_add_exp(prior2.log_tail(n), cum_z + log_g);
  }
  /// log(a_n / b_n); -inf before the first update.
  double log_ratio() const noexcept { return n == 0 ? kNegInf : log_a() - log_b(); }
};

/// Advances the no-exchange statistic by one step given the private and
/// shared log-likelihood ratios of observation n.
NoExState noex_update(const NoExState& state, double llr_private, double llr_shared) noexcept;

/// Same, computing the llrs from raw observations.
inline NoExState noex_update(const NoExState& state, double x_n, double z_n,
                             const GaussianShiftModel& model_private,
                             const GaussianShiftModel& model_shared) noexcept {
  return noex_update(state, model_private.log_likelihood_ratio(x_n),
                     model_shared.log_likelihood_ratio(z_n));
}

}  // namespace stie

#pragma once

// Closed-form predictors for the two-subsystem detector.

#include <optional>

#include "stie/models.hpp"

namespace stie {

/// Asymptotic first-order delays of the four component tests:
///   l1       = |log a| / (q1(X) + q1(Z) + d1)   joint test, subsystem 1
///   l1_tilde = |log a| / (q1(X) + d1)           private test, subsystem 1
/// and the subsystem-2 mirrors with Y and d2.
struct DelayConstants {
  double l1;
  double l1_tilde;
  double l2;
  double l2_tilde;
  double alpha;
};

/// Throws std::invalid_argument if alpha is outside (0, 1) or a denominator
/// is not positive.
DelayConstants delay_constants(double alpha, const InfoProfile& x, const InfoProfile& y,
                               const InfoProfile& z, double d1, double d2);

/// Which branch of the rate-matching argument produced r*.
enum class CouplingCase {
  NonPositiveB1,      // b1 <= 0: r* = r_a at the crossing point w*
  PositiveB1,         // b1 > 0 and w* >= b1: r* = max(r_a, r_b)
  PositiveB1Clamped,  // b1 > 0 and w* < b1: w* clamped to b1, r* = max(r_a(b1), r_b)
};

const char* to_string(CouplingCase c) noexcept;

/// Lower bound on the exponent of the error-coupling probability of
/// subsystem 1, xi ~ alpha^{r*}. For subsystem 2 swap the roles of X and Y
/// and of d1 and d2.
struct CouplingRate {
  double b1;       // q0(X) - q1(Z) + d1
  double w_star;   // matching point (after clamping)
  double r_a;
  std::optional<double> r_b;  // 4 b1 / (s1(X) + s1(Z)), only when b1 > 0
  double r_star;
  bool strong;     // r* > 1
  CouplingCase which;
};

/// Throws std::invalid_argument if a variance sum is not positive or if
/// min(q0(X), q1(Z)) + q1(Y) + d1 - d2 <= 0 (the matching rate is undefined).
CouplingRate coupling_rate(const InfoProfile& x, const InfoProfile& y, const InfoProfile& z,
                           double d1, double d2);

/// Sufficient condition for a strong procedure in the Gaussian example with
/// common mean shift: sigma2(X) < sigma2(Z)/3 and sigma2(Y) < sigma2(Z)/3.
/// Alongside, the general rate r* is evaluated for both subsystems under both
/// KL conventions.
struct StrongConditionReport {
  bool holds;
  double margin_x;  // sigma2(Z)/3 - sigma2(X); positive when satisfied
  double margin_y;
  CouplingRate rate1_integral;
  CouplingRate rate2_integral;
  CouplingRate rate1_mean_square;
  CouplingRate rate2_mean_square;
};

/// Throws std::invalid_argument unless all variances are positive and mu != 0.
StrongConditionReport gaussian_strong_condition(double sigma2_x, double sigma2_y, double sigma2_z,
                                                double mu, double d1 = 0.0, double d2 = 0.0);

/// (L)^m (1 - delta) + (L~)^m delta for the chosen subsystem.
/// Throws std::invalid_argument unless delta in [0, 1], m in {1, 2} and
/// subsystem in {1, 2}.
double predicted_stie_delay(const DelayConstants& constants, double delta_alpha, int m,
                            int subsystem = 1);

enum class Lemma2Case { Interior, Boundary, Root, Unbounded };

struct Lemma2Result {
  double x_min;  // +inf for Lemma2Case::Unbounded
  double f_min;
  Lemma2Case which;
};

/// Minimizer of f(x) = (a + b x)^2 / (c + d x) over x >= 0 for a, c, d >= 0.
///   b > 0, a/b > 2c/d:  x = a/b - 2c/d,  f = (4 b^2 / d)(a/b - c/d)
///   b > 0, a/b <= 2c/d: x = 0,           f = a^2 / c
///   b < 0:              x = -a/b,        f = 0
/// For b = 0 the infimum 0 is approached as x -> infinity (x = 0 if a = 0).
/// Throws std::invalid_argument for negative a, c, d, for d = 0, and for
/// c = 0 in the boundary case (f(0) = 0/0).
Lemma2Result lemma2_minimize(double a, double b, double c, double d);

}  // namespace stie

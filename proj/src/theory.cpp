#include "stie/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stie {

DelayConstants delay_constants(double alpha, const InfoProfile& x, const InfoProfile& y,
                               const InfoProfile& z, double d1, double d2) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("delay_constants: alpha must lie in (0, 1)");
  }
  const double denoms[] = {x.q1 + z.q1 + d1, x.q1 + d1, y.q1 + z.q1 + d2, y.q1 + d2};
  for (double v : denoms) {
    if (!(v > 0.0)) throw std::invalid_argument("delay_constants: nonpositive denominator");
  }
  const double la = std::abs(std::log(alpha));
  return DelayConstants{la / denoms[0], la / denoms[1], la / denoms[2], la / denoms[3], alpha};
}

const char* to_string(CouplingCase c) noexcept {
  switch (c) {
    case CouplingCase::NonPositiveB1: return "b1<=0";
    case CouplingCase::PositiveB1: return "b1>0";
    case CouplingCase::PositiveB1Clamped: return "b1>0,clamped";
  }
  return "?";
}

CouplingRate coupling_rate(const InfoProfile& x, const InfoProfile& y, const InfoProfile& z,
                           double d1, double d2) {
  const double var_joint = x.var_llr_post + z.var_llr_post;
  const double var_race = std::max(x.var_llr_pre, z.var_llr_post) + y.var_llr_post;
  if (!(var_joint > 0.0) || !(var_race > 0.0)) {
    throw std::invalid_argument("coupling_rate: variance sums must be positive");
  }
  const double drift = std::min(x.q0, z.q1) + y.q1 + d1 - d2;
  if (!(drift > 0.0)) {
    throw std::invalid_argument("coupling_rate: min(q0(X), q1(Z)) + q1(Y) + d1 - d2 must be > 0");
  }

  // Race rate r2(w) = drift^2 / (w var_race); early-crossing rate on its
  // growing branch r1(w) = (w + b1)^2 / (w var_joint). They meet at w_match.
  const auto race_rate = [&](double w) { return drift * drift / (w * var_race); };

  CouplingRate out{};
  out.b1 = x.q0 - z.q1 + d1;
  const double w_match = std::sqrt(var_joint / var_race) * drift - out.b1;

  if (out.b1 <= 0.0) {
    out.which = CouplingCase::NonPositiveB1;
    out.w_star = w_match;
    out.r_a = race_rate(w_match);
    out.r_star = out.r_a;
  } else {
    out.r_b = 4.0 * out.b1 / var_joint;
    if (w_match >= out.b1) {
      out.which = CouplingCase::PositiveB1;
      out.w_star = w_match;
    } else {
      out.which = CouplingCase::PositiveB1Clamped;
      out.w_star = out.b1;
    }
    out.r_a = race_rate(out.w_star);
    out.r_star = std::max(out.r_a, *out.r_b);
  }
  out.strong = out.r_star > 1.0;
  return out;
}

StrongConditionReport gaussian_strong_condition(double sigma2_x, double sigma2_y, double sigma2_z,
                                                double mu, double d1, double d2) {
  if (!(sigma2_x > 0.0 && sigma2_y > 0.0 && sigma2_z > 0.0)) {
    throw std::invalid_argument("gaussian_strong_condition: variances must be positive");
  }
  // f0 = N(mu, s2), f1 = N(0, s2).
  const GaussianShiftModel mx(mu, 0.0, sigma2_x);
  const GaussianShiftModel my(mu, 0.0, sigma2_y);
  const GaussianShiftModel mz(mu, 0.0, sigma2_z);

  StrongConditionReport r{};
  r.margin_x = sigma2_z / 3.0 - sigma2_x;
  r.margin_y = sigma2_z / 3.0 - sigma2_y;
  r.holds = r.margin_x > 0.0 && r.margin_y > 0.0;

  const auto rates = [&](KlConvention c, CouplingRate& one, CouplingRate& two) {
    const InfoProfile px = info_profile(mx, c);
    const InfoProfile py = info_profile(my, c);
    const InfoProfile pz = info_profile(mz, c);
    one = coupling_rate(px, py, pz, d1, d2);
    two = coupling_rate(py, px, pz, d2, d1);
  };
  rates(KlConvention::Integral, r.rate1_integral, r.rate2_integral);
  rates(KlConvention::MeanSquareOverVariance, r.rate1_mean_square, r.rate2_mean_square);
  return r;
}

double predicted_stie_delay(const DelayConstants& constants, double delta_alpha, int m,
                            int subsystem) {
  if (!(delta_alpha >= 0.0 && delta_alpha <= 1.0)) {
    throw std::invalid_argument("predicted_stie_delay: delta must lie in [0, 1]");
  }
  if (m != 1 && m != 2) throw std::invalid_argument("predicted_stie_delay: m must be 1 or 2");
  if (subsystem != 1 && subsystem != 2) {
    throw std::invalid_argument("predicted_stie_delay: subsystem must be 1 or 2");
  }
  const double joint = subsystem == 1 ? constants.l1 : constants.l2;
  const double priv = subsystem == 1 ? constants.l1_tilde : constants.l2_tilde;
  return std::pow(joint, m) * (1.0 - delta_alpha) + std::pow(priv, m) * delta_alpha;
}

Lemma2Result lemma2_minimize(double a, double b, double c, double d) {
  if (a < 0.0 || c < 0.0 || d < 0.0) {
    throw std::invalid_argument("lemma2_minimize: a, c, d must be >= 0");
  }
  if (d == 0.0) throw std::invalid_argument("lemma2_minimize: d = 0 is degenerate");

  if (b > 0.0) {
    const double ratio = a / b;
    if (ratio > 2.0 * c / d) {
      return {ratio - 2.0 * c / d, 4.0 * b * b / d * (ratio - c / d), Lemma2Case::Interior};
    }
    if (c == 0.0) throw std::invalid_argument("lemma2_minimize: f(0) = 0/0 for c = 0");
    return {0.0, a * a / c, Lemma2Case::Boundary};
  }
  if (b < 0.0) return {-a / b, 0.0, Lemma2Case::Root};
  if (a == 0.0) return {0.0, 0.0, Lemma2Case::Root};
  return {std::numeric_limits<double>::infinity(), 0.0, Lemma2Case::Unbounded};
}

}  // namespace stie

#include "stie/statistics.hpp"

#include <algorithm>
#include <stdexcept>

namespace stie {

double log_sum_exp(std::span<const double> values) noexcept {
  if (values.empty()) return kNegInf;
  const double top = *std::max_element(values.begin(), values.end());
  if (top == kNegInf || std::isinf(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

LlrPrefix::LlrPrefix(std::span<const double> llrs) {
  prefix_.reserve(llrs.size() + 1);
  prefix_.push_back(0.0);
  for (double r : llrs) prefix_.push_back(prefix_.back() + r);
}

double LlrPrefix::segment(Step k, Step n) const {
  if (n > size() || k < 1 || k > n + 1) throw std::out_of_range("LlrPrefix::segment");
  return prefix_[static_cast<std::size_t>(n)] - prefix_[static_cast<std::size_t>(k - 1)];
}

SrpState srp_update(const SrpState& state, double llr_increment) noexcept {
  SrpState next = state;
  ++next.n;
  const double base = log_add_exp(state.log_lambda, state.prior.log_rho());
  if (llr_increment == kNegInf) {
    next.log_lambda = kNegInf;
  } else if (base == std::numeric_limits<double>::infinity() ||
             llr_increment == std::numeric_limits<double>::infinity()) {
    next.log_lambda = std::numeric_limits<double>::infinity();
  } else {
    next.log_lambda = base + llr_increment - state.prior.log_survive();
  }
  return next;
}

double srp_direct(std::span<const double> llrs, const GeometricPrior& prior) {
  if (llrs.empty()) throw std::invalid_argument("srp_direct: empty llr stream");
  const auto n = static_cast<Step>(llrs.size());
  std::vector<double> terms;
  terms.reserve(llrs.size());
  for (Step k = 1; k <= n; ++k) {
    double r = 0.0;
    for (Step i = k; i <= n; ++i) r += llrs[static_cast<std::size_t>(i - 1)];
    terms.push_back(prior.log_pmf(k) + r);
  }
  return log_sum_exp(terms) - prior.log_tail(n);
}

NoExState noex_update(const NoExState& state, double llr_private, double llr_shared) noexcept {
  NoExState next = state;
  const Step n = ++next.n;
  // G_n picks up pi2(n) exp(-C^Z_{n-1}); A_n picks up the k1 = n term, which
  // only involves data up to n - 1.
  next.log_g = log_add_exp(state.log_g, state.prior2.log_pmf(n) - state.cum_z);
  const double inner = log_add_exp(next.log_g, state.prior2.log_tail(n) - state.cum_z);
  next.log_a_sum = log_add_exp(state.log_a_sum, state.prior1.log_pmf(n) - state.cum_x + inner);
  next.cum_x += llr_private;
  next.cum_z += llr_shared;
  return next;
}

}  // namespace stie

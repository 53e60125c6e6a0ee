#include "stie/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stie {

GaussianShiftModel::GaussianShiftModel(double mu0, double mu1, double sigma2)
    : mu0_(mu0), mu1_(mu1), sigma2_(sigma2), half_inv_sigma2_(0.5 / sigma2) {
  if (!std::isfinite(mu0) || !std::isfinite(mu1) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("GaussianShiftModel: parameters must be finite");
  }
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("GaussianShiftModel: sigma2 must be > 0, got " +
                                std::to_string(sigma2));
  }
  if (mu0 == mu1) {
    throw std::invalid_argument("GaussianShiftModel: mu0 and mu1 must differ");
  }
}

InfoProfile info_profile(const GaussianShiftModel& model, KlConvention convention) {
  if (!(model.sigma2() > 0.0)) {
    throw std::invalid_argument("info_profile: sigma2 must be > 0");
  }
  const double shift = model.mu1() - model.mu0();
  const double snr = shift * shift / model.sigma2();
  InfoProfile p;
  // r = shift (x - (mu0+mu1)/2) / sigma2 is Gaussian with variance shift^2/sigma2
  // under either density and mean +-shift^2/(2 sigma2).
  p.q1 = convention == KlConvention::Integral ? 0.5 * snr : snr;
  p.q0 = p.q1;
  p.var_llr_pre = snr;
  p.var_llr_post = snr;
  return p;
}

GeometricPrior::GeometricPrior(double rho) : rho_(rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::invalid_argument("GeometricPrior: rho must lie in (0, 1), got " +
                                std::to_string(rho));
  }
  log_rho_ = std::log(rho);
  log_survive_ = std::log1p(-rho);
}

Step GeometricPrior::sample(double u) const noexcept {
  // P(k > n) = (1 - rho)^n, so k = 1 + floor(log u / log(1 - rho)).
  const double extra = std::floor(std::log(u) / log_survive_);
  constexpr double cap = static_cast<double>(std::numeric_limits<Step>::max() / 4);
  if (!(extra < cap)) return static_cast<Step>(cap);
  return 1 + static_cast<Step>(extra);
}

double prior_pmf(const GeometricPrior& prior, Step k) {
  if (k < 1) throw std::invalid_argument("prior_pmf: k must be >= 1");
  return prior.rho() * std::pow(1.0 - prior.rho(), static_cast<double>(k - 1));
}

double prior_tail(const GeometricPrior& prior, Step n) {
  if (n < 0) throw std::invalid_argument("prior_tail: n must be >= 0");
  return std::pow(1.0 - prior.rho(), static_cast<double>(n));
}

void StreamScenario::validate() const {
  if (horizon < 1) throw std::invalid_argument("StreamScenario: horizon must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

StreamGenerator::StreamGenerator(const StreamScenario& scenario, std::uint64_t seed)
    : scenario_(&scenario),
      rng_(seed),
      sd_x_(std::sqrt(scenario.model_x.sigma2())),
      sd_y_(std::sqrt(scenario.model_y.sigma2())),
      sd_z_(std::sqrt(scenario.model_z.sigma2())) {
  // 1 - canonical lies in (0, 1], which keeps log(u) finite.
  const double u1 = 1.0 - std::generate_canonical<double, 64>(rng_);
  const double u2 = 1.0 - std::generate_canonical<double, 64>(rng_);
  const Step never = scenario.horizon + 1;
  k1_ = scenario.policy1 == ChangePolicy::Never ? never : scenario.prior1.sample(u1);
  k2_ = scenario.policy2 == ChangePolicy::Never ? never : scenario.prior2.sample(u2);
}

Observation StreamGenerator::next() {
  ++step_;
  const auto& s = *scenario_;
  const bool post_x = step_ >= k1_;
  const bool post_y = step_ >= k2_;
  const bool post_z = post_x || post_y;
  Observation obs;
  obs.x = (post_x ? s.model_x.mu1() : s.model_x.mu0()) + sd_x_ * normal_(rng_);
  obs.y = (post_y ? s.model_y.mu1() : s.model_y.mu0()) + sd_y_ * normal_(rng_);
  obs.z = (post_z ? s.model_z.mu1() : s.model_z.mu0()) + sd_z_ * normal_(rng_);
  return obs;
}

ScenarioSample sample_scenario(const StreamScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  StreamGenerator gen(scenario, seed);
  ScenarioSample out;
  out.k1 = gen.k1();
  out.k2 = gen.k2();
  const auto n = static_cast<std::size_t>(scenario.horizon);
  out.x.reserve(n);
  out.y.reserve(n);
  out.z.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Observation obs = gen.next();
    out.x.push_back(obs.x);
    out.y.push_back(obs.y);
    out.z.push_back(obs.z);
  }
  return out;
}

}  // namespace stie

#pragma once

// Observation densities, their information quantities, change-time priors and
// the three-stream scenario generator (private X, private Y, shared Z).

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace stie {

using Step = std::int64_t;

/// Equal-variance Gaussian mean shift: f0 = N(mu0, sigma2), f1 = N(mu1, sigma2).
class GaussianShiftModel {
 public:
  /// Throws std::invalid_argument unless sigma2 > 0, mu0 != mu1 and all
  /// parameters are finite.
  GaussianShiftModel(double mu0, double mu1, double sigma2);

  double mu0() const noexcept { return mu0_; }
  double mu1() const noexcept { return mu1_; }
  double sigma2() const noexcept { return sigma2_; }

  /// log f1(x) - log f0(x).
  double log_likelihood_ratio(double x) const noexcept {
    const double a = x - mu0_;
    const double b = x - mu1_;
    return (a * a - b * b) * half_inv_sigma2_;
  }

  friend bool operator==(const GaussianShiftModel&, const GaussianShiftModel&) = default;

 private:
  double mu0_;
  double mu1_;
  double sigma2_;
  double half_inv_sigma2_;
};

inline double log_likelihood_ratio(const GaussianShiftModel& model, double x) noexcept {
  return model.log_likelihood_ratio(x);
}

/// KL strengths and log-likelihood-ratio variances of one stream.
struct InfoProfile {
  double q1 = 0.0;            // KL(f1 || f0)
  double q0 = 0.0;            // KL(f0 || f1)
  double var_llr_pre = 0.0;   // Var of the log-LR under f0
  double var_llr_post = 0.0;  // Var of the log-LR under f1
};

/// Which expression is used for the KL strength of a Gaussian mean shift.
/// `Integral` is the divergence itself, (mu1-mu0)^2 / (2 sigma2). The
/// `MeanSquareOverVariance` form drops the factor 2; it is kept for
/// comparing the coupling rate under both readings.
enum class KlConvention { Integral, MeanSquareOverVariance };

InfoProfile info_profile(const GaussianShiftModel& model,
                         KlConvention convention = KlConvention::Integral);

/// pi(k) = rho (1 - rho)^(k-1) on k = 1, 2, ...
class GeometricPrior {
 public:
  /// Throws std::invalid_argument unless 0 < rho < 1.
  explicit GeometricPrior(double rho);

  double rho() const noexcept { return rho_; }
  double log_rho() const noexcept { return log_rho_; }
  /// log(1 - rho), strictly negative.
  double log_survive() const noexcept { return log_survive_; }
  /// d = -log(1 - rho); (1/n) log P(lambda > n) = -d for every n.
  double tail_rate() const noexcept { return -log_survive_; }

  double log_pmf(Step k) const noexcept {
    return log_rho_ + static_cast<double>(k - 1) * log_survive_;
  }
  double log_tail(Step n) const noexcept { return static_cast<double>(n) * log_survive_; }

  /// Inverse-CDF draw of the change time from a uniform in (0, 1].
  Step sample(double u) const noexcept;

  friend bool operator==(const GeometricPrior& a, const GeometricPrior& b) noexcept {
    return a.rho_ == b.rho_;
  }

 private:
  double rho_;
  double log_rho_;
  double log_survive_;
};

/// Throws std::invalid_argument for k < 1.
double prior_pmf(const GeometricPrior& prior, Step k);
/// P(lambda > n); throws std::invalid_argument for n < 0.
double prior_tail(const GeometricPrior& prior, Step n);

/// How a subsystem's change time is produced in a scenario.
enum class ChangePolicy {
  Sampled,  // drawn from the subsystem prior
  Never,    // forced beyond the horizon (conditioning on lambda = infinity)
};

struct StreamScenario {
  GaussianShiftModel model_x;
  GaussianShiftModel model_y;
  GaussianShiftModel model_z;
  GeometricPrior prior1;
  GeometricPrior prior2;
  Step horizon;
  ChangePolicy policy1 = ChangePolicy::Sampled;
  ChangePolicy policy2 = ChangePolicy::Sampled;

  /// Throws std::invalid_argument if horizon < 1.
  void validate() const;
};

/// Mixes a master seed with a counter (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) noexcept;

/// One step of the three observation streams.
struct Observation {
  double x;
  double y;
  double z;
};

/// Draws change times once, then produces observations one step at a time.
/// X switches at k1, Y at k2 and Z at min(k1, k2); sample n is post-change
/// when n >= the relevant change time.
class StreamGenerator {
 public:
  StreamGenerator(const StreamScenario& scenario, std::uint64_t seed);

  Step k1() const noexcept { return k1_; }
  Step k2() const noexcept { return k2_; }
  /// Index of the observation returned by the most recent next().
  Step step() const noexcept { return step_; }

  Observation next();

 private:
  const StreamScenario* scenario_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  Step k1_ = 0;
  Step k2_ = 0;
  Step step_ = 0;
  double sd_x_;
  double sd_y_;
  double sd_z_;
};

struct ScenarioSample {
  Step k1 = 0;
  Step k2 = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
};

/// Materializes `horizon` steps of all three streams; deterministic in seed.
ScenarioSample sample_scenario(const StreamScenario& scenario, std::uint64_t seed);

}  // namespace stie

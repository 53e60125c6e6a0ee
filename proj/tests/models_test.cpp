#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "stie/models.hpp"

namespace {

using namespace stie;

double normal_pdf(double x, double mu, double s2) {
  return std::exp(-(x - mu) * (x - mu) / (2 * s2)) / std::sqrt(2 * std::numbers::pi * s2);
}

// Trapezoid rule for KL(f || g) on a wide window.
double kl_quadrature(double mu_f, double mu_g, double s2) {
  const double lo = std::min(mu_f, mu_g) - 20 * std::sqrt(s2);
  const double hi = std::max(mu_f, mu_g) + 20 * std::sqrt(s2);
  const int n = 200000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double f = normal_pdf(x, mu_f, s2);
    const double log_ratio = ((x - mu_g) * (x - mu_g) - (x - mu_f) * (x - mu_f)) / (2 * s2);
    const double term = f * log_ratio;
    acc += (i == 0 || i == n) ? term / 2 : term;
  }
  return acc * h;
}

TEST(GaussianShiftModel, RejectsBadParameters) {
  EXPECT_THROW(GaussianShiftModel(0, 1, 0), std::invalid_argument);
  EXPECT_THROW(GaussianShiftModel(0, 1, -1), std::invalid_argument);
  EXPECT_THROW(GaussianShiftModel(1, 1, 1), std::invalid_argument);
  EXPECT_THROW(GaussianShiftModel(NAN, 1, 1), std::invalid_argument);
  EXPECT_THROW(GaussianShiftModel(0, 1, INFINITY), std::invalid_argument);
}

TEST(GaussianShiftModel, LlrMatchesDensityRatio) {
  const GaussianShiftModel m(1.0, -0.5, 0.7);
  for (double x : {-3.0, -0.2, 0.0, 0.25, 4.0}) {
    const double expect = std::log(normal_pdf(x, -0.5, 0.7) / normal_pdf(x, 1.0, 0.7));
    EXPECT_NEAR(m.log_likelihood_ratio(x), expect, 1e-12);
  }
  EXPECT_NEAR(m.log_likelihood_ratio(0.25), 0.0, 1e-15);
}

TEST(InfoProfile, IntegralConventionMatchesQuadrature) {
  for (const auto& [mu0, mu1, s2] :
       {std::tuple{1.0, 0.0, 0.5}, std::tuple{0.0, 2.0, 3.0}, std::tuple{-1.0, 0.3, 0.2}}) {
    const InfoProfile p = info_profile(GaussianShiftModel(mu0, mu1, s2));
    EXPECT_NEAR(p.q1, kl_quadrature(mu1, mu0, s2), 1e-8);
    EXPECT_NEAR(p.q0, kl_quadrature(mu0, mu1, s2), 1e-8);
  }
}

TEST(InfoProfile, MeanSquareConventionDoublesTheDivergence) {
  const GaussianShiftModel m(1.0, 0.0, 0.2);
  const InfoProfile a = info_profile(m, KlConvention::Integral);
  const InfoProfile b = info_profile(m, KlConvention::MeanSquareOverVariance);
  EXPECT_DOUBLE_EQ(a.q1, 2.5);
  EXPECT_DOUBLE_EQ(b.q1, 5.0);
  EXPECT_DOUBLE_EQ(b.var_llr_pre, a.var_llr_pre);
}

TEST(InfoProfile, LlrMomentsMatchMonteCarlo) {
  const GaussianShiftModel m(1.0, 0.0, 0.5);
  const InfoProfile p = info_profile(m);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, std::sqrt(0.5));
  const int n = 400000;
  for (bool post : {false, true}) {
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double r = m.log_likelihood_ratio((post ? 0.0 : 1.0) + noise(rng));
      s += r;
      s2 += r * r;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    const double expected_mean = post ? p.q1 : -p.q0;
    const double expected_var = post ? p.var_llr_post : p.var_llr_pre;
    EXPECT_NEAR(mean, expected_mean, 5 * std::sqrt(expected_var / n));
    EXPECT_NEAR(var, expected_var, 5 * expected_var * std::sqrt(2.0 / n));
  }
}

TEST(GeometricPrior, RejectsBadRho) {
  EXPECT_THROW(GeometricPrior(0.0), std::invalid_argument);
  EXPECT_THROW(GeometricPrior(1.0), std::invalid_argument);
  EXPECT_THROW(GeometricPrior(-0.1), std::invalid_argument);
  EXPECT_THROW(GeometricPrior(NAN), std::invalid_argument);
}

TEST(GeometricPrior, PmfAndTailPartitionUnity) {
  for (double rho : {0.01, 0.05, 0.5, 0.99}) {
    const GeometricPrior p(rho);
    double mass = 0.0;
    for (Step n = 1; n <= 300; ++n) {
      mass += prior_pmf(p, n);
      EXPECT_NEAR(mass + prior_tail(p, n), 1.0, 1e-12) << "rho=" << rho << " n=" << n;
      EXPECT_NEAR(p.log_pmf(n), std::log(rho) + (n - 1) * std::log1p(-rho), 1e-9);
      EXPECT_NEAR(p.log_tail(n), n * std::log1p(-rho), 1e-9);
    }
    EXPECT_NEAR(p.tail_rate(), -std::log(1 - rho), 1e-15);
    EXPECT_GT(p.tail_rate(), 0.0);
  }
  const GeometricPrior p(0.3);
  EXPECT_THROW(prior_pmf(p, 0), std::invalid_argument);
  EXPECT_THROW(prior_tail(p, -1), std::invalid_argument);
  EXPECT_DOUBLE_EQ(prior_tail(p, 0), 1.0);
}

TEST(GeometricPrior, SamplerMatchesPmf) {
  const GeometricPrior p(0.2);
  std::mt19937_64 rng(3);
  const int n = 200000;
  std::vector<int> counts(8, 0);
  for (int i = 0; i < n; ++i) {
    const double u = 1.0 - std::generate_canonical<double, 64>(rng);
    const Step k = p.sample(u);
    ASSERT_GE(k, 1);
    if (k <= 7) ++counts[static_cast<std::size_t>(k)];
  }
  for (Step k = 1; k <= 7; ++k) {
    const double pk = prior_pmf(p, k);
    EXPECT_NEAR(counts[static_cast<std::size_t>(k)] / double(n), pk,
                5 * std::sqrt(pk * (1 - pk) / n));
  }
  EXPECT_EQ(p.sample(1.0), 1);
}

StreamScenario scenario(Step horizon, ChangePolicy p1 = ChangePolicy::Sampled,
                        ChangePolicy p2 = ChangePolicy::Sampled) {
  return StreamScenario{GaussianShiftModel(1, 0, 0.5), GaussianShiftModel(1, 0, 0.5),
                        GaussianShiftModel(2, -1, 1.0), GeometricPrior(0.05),
                        GeometricPrior(0.1),           horizon,
                        p1,                            p2};
}

TEST(StreamScenario, ValidatesHorizon) {
  EXPECT_THROW(scenario(0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(scenario(1).validate());
}

TEST(DeriveSeed, DistinctAndStable) {
  EXPECT_EQ(derive_seed(5, 7), derive_seed(5, 7));
  EXPECT_NE(derive_seed(5, 7), derive_seed(5, 8));
  EXPECT_NE(derive_seed(5, 7), derive_seed(6, 7));
}

TEST(StreamGenerator, DeterministicInSeed) {
  const auto s = scenario(50);
  const ScenarioSample a = sample_scenario(s, 99);
  const ScenarioSample b = sample_scenario(s, 99);
  const ScenarioSample c = sample_scenario(s, 100);
  EXPECT_EQ(a.k1, b.k1);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.x.size(), 50u);
  EXPECT_NE(a.x, c.x);
}

TEST(StreamGenerator, NeverPolicyPlacesChangeBeyondHorizon) {
  const auto s = scenario(40, ChangePolicy::Never, ChangePolicy::Never);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScenarioSample smp = sample_scenario(s, seed);
    EXPECT_EQ(smp.k1, 41);
    EXPECT_EQ(smp.k2, 41);
  }
}

TEST(StreamGenerator, ChangeTimeMeanMatchesPrior) {
  const auto s = scenario(1);
  const int n = 50000;
  double m1 = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    StreamGenerator g(s, derive_seed(1, static_cast<std::uint64_t>(i)));
    m1 += static_cast<double>(g.k1());
    m2 += static_cast<double>(g.k2());
  }
  // Geometric mean 1/rho, sd sqrt(1-rho)/rho.
  EXPECT_NEAR(m1 / n, 20.0, 5 * std::sqrt(0.95) / 0.05 / std::sqrt(n));
  EXPECT_NEAR(m2 / n, 10.0, 5 * std::sqrt(0.9) / 0.1 / std::sqrt(n));
}

TEST(StreamGenerator, PreAndPostChangeMoments) {
  // Z switches at min(k1, k2); X at k1 and Y at k2.
  const auto s = scenario(200);
  double sums[3][2] = {};
  double counts[3][2] = {};
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const ScenarioSample smp = sample_scenario(s, seed);
    const Step kz = std::min(smp.k1, smp.k2);
    for (std::size_t i = 0; i < smp.x.size(); ++i) {
      const Step n = static_cast<Step>(i) + 1;
      const int px = n >= smp.k1, py = n >= smp.k2, pz = n >= kz;
      sums[0][px] += smp.x[i], counts[0][px] += 1;
      sums[1][py] += smp.y[i], counts[1][py] += 1;
      sums[2][pz] += smp.z[i], counts[2][pz] += 1;
    }
  }
  const double expect[3][2] = {{1, 0}, {1, 0}, {2, -1}};
  const double sd[3] = {std::sqrt(0.5), std::sqrt(0.5), 1.0};
  for (int s_i = 0; s_i < 3; ++s_i) {
    for (int post = 0; post < 2; ++post) {
      ASSERT_GT(counts[s_i][post], 1000);
      EXPECT_NEAR(sums[s_i][post] / counts[s_i][post], expect[s_i][post],
                  5 * sd[s_i] / std::sqrt(counts[s_i][post]));
    }
  }
}

}  // namespace

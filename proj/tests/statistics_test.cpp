#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "stie/statistics.hpp"

namespace {

using namespace stie;
using ld = long double;

ld lse(const std::vector<ld>& v) {
  ld m = -INFINITY;
  for (ld x : v) m = std::max(m, x);
  if (m == -INFINITY) return m;
  ld s = 0;
  for (ld x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Cumulative llr C_n with C_0 = 0.
std::vector<ld> cumulative(const std::vector<double>& r) {
  std::vector<ld> c(r.size() + 1, 0.0L);
  for (std::size_t i = 0; i < r.size(); ++i) c[i + 1] = c[i] + r[i];
  return c;
}

// Posterior odds of {lambda <= n} enumerated over the change time.
ld srp_posterior_oracle(const std::vector<double>& r, double rho) {
  const auto c = cumulative(r);
  const std::size_t n = r.size();
  std::vector<ld> num;
  for (std::size_t k = 1; k <= n; ++k) {
    num.push_back(std::log((ld)rho) + (k - 1) * std::log1p(-(ld)rho) + c[n] - c[k - 1]);
  }
  return lse(num) - n * std::log1p(-(ld)rho);
}

// Posterior odds of {lambda1 <= n} from X and Z, where Z switches at
// min(lambda1, lambda2). Exact double sum, with the lambda > n classes
// carried by their tail masses.
ld noex_posterior_oracle(const std::vector<double>& rx, const std::vector<double>& rz, double rho1,
                         double rho2) {
  const auto cx = cumulative(rx);
  const auto cz = cumulative(rz);
  const std::size_t n = rx.size();
  const auto lpmf = [](double rho, std::size_t k) {
    return std::log((ld)rho) + (k - 1) * std::log1p(-(ld)rho);
  };
  const auto ltail = [](double rho, std::size_t m) { return m * std::log1p(-(ld)rho); };
  const auto segx = [&](std::size_t k) { return cx[n] - cx[k - 1]; };
  const auto segz = [&](std::size_t k) { return cz[n] - cz[k - 1]; };
  std::vector<ld> num, den;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t j = 1; j <= n; ++j) {
      num.push_back(lpmf(rho1, k) + lpmf(rho2, j) + segx(k) + segz(std::min(k, j)));
    }
    num.push_back(lpmf(rho1, k) + ltail(rho2, n) + segx(k) + segz(k));
  }
  for (std::size_t j = 1; j <= n; ++j) den.push_back(ltail(rho1, n) + lpmf(rho2, j) + segz(j));
  den.push_back(ltail(rho1, n) + ltail(rho2, n));
  return lse(num) - lse(den);
}

std::vector<double> mixed_stream(std::mt19937_64& rng, std::size_t len, double shift, double s2,
                                 std::size_t change) {
  std::normal_distribution<double> noise(0.0, std::sqrt(s2));
  std::vector<double> r(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double x = (i + 1 >= change ? 0.0 : shift) + noise(rng);
    r[i] = ((x - shift) * (x - shift) - x * x) / (2 * s2);
  }
  return r;
}

TEST(LogAddExp, Basics) {
  EXPECT_DOUBLE_EQ(log_add_exp(kNegInf, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(log_add_exp(2.0, kNegInf), 2.0);
  EXPECT_EQ(log_add_exp(kNegInf, kNegInf), kNegInf);
  EXPECT_NEAR(log_add_exp(0.0, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_add_exp(1000.0, 1000.0), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(log_add_exp(-1000.0, 0.0), 0.0, 1e-300);
  const std::vector<double> v = {1.0, 2.0, 3.0};
  EXPECT_NEAR(log_sum_exp(v), std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)), 1e-14);
  EXPECT_EQ(log_sum_exp(std::span<const double>{}), kNegInf);
}

TEST(LlrPrefix, Segments) {
  const std::vector<double> r = {1.0, -2.0, 0.5, 4.0};
  const LlrPrefix p(r);
  EXPECT_EQ(p.size(), 4);
  EXPECT_DOUBLE_EQ(p.segment(1, 4), 3.5);
  EXPECT_DOUBLE_EQ(p.segment(2, 3), -1.5);
  EXPECT_DOUBLE_EQ(p.segment(5, 4), 0.0);
  EXPECT_THROW(p.segment(0, 2), std::out_of_range);
  EXPECT_THROW(p.segment(2, 5), std::out_of_range);
}

TEST(Srp, EmptyStreamRejected) {
  EXPECT_THROW(srp_direct(std::span<const double>{}, GeometricPrior(0.1)), std::invalid_argument);
  EXPECT_EQ(SrpState::initial(GeometricPrior(0.1)).log_lambda, kNegInf);
}

TEST(Srp, FirstStepByHand) {
  // Lambda_1 = rho e^{r} / (1 - rho).
  const GeometricPrior p(0.2);
  const SrpState s = srp_update(SrpState::initial(p), 0.7);
  EXPECT_EQ(s.n, 1);
  EXPECT_NEAR(s.log_lambda, std::log(0.2 / 0.8) + 0.7, 1e-15);
}

TEST(Srp, RecursionMatchesDirectSumOnRandomStreams) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len_dist(1, 200);
  std::uniform_real_distribution<double> rho_dist(0.005, 0.5);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = len_dist(rng);
    const std::size_t change = std::uniform_int_distribution<std::size_t>(1, len + 20)(rng);
    const auto r = mixed_stream(rng, len, 1.0, 0.5, change);
    const GeometricPrior prior(rho_dist(rng));
    SrpState s = SrpState::initial(prior);
    for (double v : r) s = srp_update(s, v);
    const double direct = srp_direct(r, prior);
    const double rel = std::abs(s.log_lambda - direct) / std::max(1.0, std::abs(direct));
    worst = std::max(worst, rel);
  }
  EXPECT_LE(worst, 1e-9);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
}

TEST(Srp, DirectSumMatchesPosteriorEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + trial % 20;
    const auto r = mixed_stream(rng, len, 1.3, 0.8, 1 + trial % 7);
    const double rho = 0.02 + 0.3 * (trial % 5) / 4.0;
    const ld oracle = srp_posterior_oracle(r, rho);
    EXPECT_NEAR(srp_direct(r, GeometricPrior(rho)), static_cast<double>(oracle),
                1e-10 * std::max<ld>(1, std::abs(oracle)));
  }
}

TEST(Srp, PosteriorFromDensitiesForShortStreams) {
  // Enumerate the joint density of (lambda, x_1..x_n) from Gaussian pdfs and
  // compare P(lambda <= n | x) / P(lambda > n | x) with the recursion.
  const double mu0 = 1.0, mu1 = 0.0, s2 = 0.5, rho = 0.1;
  const GaussianShiftModel model(mu0, mu1, s2);
  const GeometricPrior prior(rho);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> noise(0.0, std::sqrt(s2));
  const auto pdf = [&](double x, double mu) {
    return std::exp(-(x - mu) * (x - mu) / (2 * s2)) / std::sqrt(2 * M_PI * s2);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 20;
    std::vector<double> x(n);
    for (auto& v : x) v = (trial % 2 ? mu1 : mu0) + noise(rng);
    ld before = 0, after = 1;
    for (double v : x) after *= pdf(v, mu0);
    after *= std::pow((ld)(1 - rho), (ld)n);
    for (std::size_t k = 1; k <= n; ++k) {
      ld joint = rho * std::pow((ld)(1 - rho), (ld)(k - 1));
      for (std::size_t i = 1; i <= n; ++i) joint *= pdf(x[i - 1], i >= k ? mu1 : mu0);
      before += joint;
    }
    SrpState s = SrpState::initial(prior);
    for (double v : x) s = srp_update(s, model.log_likelihood_ratio(v));
    EXPECT_NEAR(s.log_lambda, static_cast<double>(std::log(before / after)), 1e-9);
  }
}

TEST(Srp, MonotoneInEvidence) {
  const GeometricPrior p(0.05);
  SrpState a = SrpState::initial(p), b = SrpState::initial(p);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double r = noise(rng);
    a = srp_update(a, r);
    b = srp_update(b, r + 0.1);
    EXPECT_GT(b.log_lambda, a.log_lambda);
  }
}

TEST(Srp, SaturatesWithoutNan) {
  const GeometricPrior p(0.05);
  SrpState s = SrpState::initial(p);
  s = srp_update(s, INFINITY);
  EXPECT_EQ(s.log_lambda, INFINITY);
  s = srp_update(s, 1.0);
  EXPECT_EQ(s.log_lambda, INFINITY);
  SrpState t = srp_update(SrpState::initial(p), -INFINITY);
  EXPECT_EQ(t.log_lambda, kNegInf);
  t = srp_update(t, 0.0);
  EXPECT_NEAR(t.log_lambda, std::log(0.05 / 0.95), 1e-14);
}

TEST(NoExchange, HandExampleAtFirstStep) {
  const NoExState s =
      noex_update(NoExState::initial(GeometricPrior(0.5), GeometricPrior(0.5)), 0.0, 0.0);
  EXPECT_NEAR(s.log_ratio(), 0.0, 1e-15);
  EXPECT_EQ(NoExState::initial(GeometricPrior(0.5), GeometricPrior(0.5)).log_ratio(), kNegInf);
}

TEST(NoExchange, RecursionMatchesDoubleSum) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> rho_dist(0.01, 0.4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + trial % 50;
    const std::size_t k1 = 1 + trial % 37, k2 = 1 + (trial * 7) % 41;
    const auto rx = mixed_stream(rng, len, 1.0, 0.5, k1);
    const auto rz = mixed_stream(rng, len, 1.0, 1.0, std::min(k1, k2));
    const double rho1 = rho_dist(rng), rho2 = rho_dist(rng);
    NoExState s = NoExState::initial(GeometricPrior(rho1), GeometricPrior(rho2));
    for (std::size_t i = 0; i < len; ++i) {
      s = noex_update(s, rx[i], rz[i]);
      if (i + 1 == len || i % 9 == 0) {
        const std::vector<double> px(rx.begin(), rx.begin() + i + 1);
        const std::vector<double> pz(rz.begin(), rz.begin() + i + 1);
        const ld oracle = noex_posterior_oracle(px, pz, rho1, rho2);
        EXPECT_NEAR(s.log_ratio(), static_cast<double>(oracle),
                    1e-8 * std::max<ld>(1, std::abs(oracle)))
            << "trial " << trial << " n " << i + 1;
      }
    }
  }
}

TEST(NoExchange, UninformativeSharedStreamReducesToSrp) {
  std::mt19937_64 rng(8);
  const auto rx = mixed_stream(rng, 120, 1.0, 0.5, 30);
  const GeometricPrior p1(0.07), p2(0.2);
  NoExState s = NoExState::initial(p1, p2);
  SrpState srp = SrpState::initial(p1);
  for (double r : rx) {
    s = noex_update(s, r, 0.0);
    srp = srp_update(srp, r);
    EXPECT_NEAR(s.log_ratio(), srp.log_lambda, 1e-9 * std::max(1.0, std::abs(srp.log_lambda)));
  }
}

TEST(NoExchange, RawObservationOverloadAgrees) {
  const GaussianShiftModel mx(1, 0, 0.5), mz(1, 0, 1.0);
  NoExState a = NoExState::initial(GeometricPrior(0.05), GeometricPrior(0.05));
  NoExState b = a;
  for (double v : {0.3, 1.2, -0.4, 0.1}) {
    a = noex_update(a, v, v + 0.5, mx, mz);
    b = noex_update(b, mx.log_likelihood_ratio(v), mz.log_likelihood_ratio(v + 0.5));
  }
  EXPECT_DOUBLE_EQ(a.log_ratio(), b.log_ratio());
}

TEST(NoExchange, IncreasingInPrivateEvidence) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  NoExState a = NoExState::initial(GeometricPrior(0.05), GeometricPrior(0.05));
  NoExState b = a;
  for (int i = 0; i < 80; ++i) {
    const double rx = noise(rng), rz = noise(rng);
    a = noex_update(a, rx, rz);
    b = noex_update(b, rx + 0.2, rz);
    EXPECT_GT(b.log_ratio(), a.log_ratio());
  }
}

}  // namespace

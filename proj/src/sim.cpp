#include "stie/sim.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "stie/statistics.hpp"

namespace stie {

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::Stie: return "stie";
    case Variant::PrivateOnly: return "private-only";
    case Variant::NoExchange: return "no-exchange";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) noexcept {
  for (Variant v : {Variant::Stie, Variant::PrivateOnly, Variant::NoExchange}) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

const char* to_string(WhichFirst w) noexcept {
  switch (w) {
    case WhichFirst::First: return "1";
    case WhichFirst::Second: return "2";
    case WhichFirst::Tie: return "tie";
    case WhichFirst::Neither: return "neither";
  }
  return "?";
}

namespace {

// "Never stopped" compares as +infinity.
bool earlier(const std::optional<Step>& a, const std::optional<Step>& b) {
  return a && (!b || *a < *b);
}

bool not_later(const std::optional<Step>& a, const std::optional<Step>& b) {
  return !b || (a && *a <= *b);
}

}  // namespace

TrialOutcome classify_trial(std::uint64_t trial_index, Step k1, Step k2, const VariantStops& s) {
  TrialOutcome o;
  o.trial_index = trial_index;
  o.k1 = k1;
  o.k2 = k2;
  o.nu_bar_1 = s.nu1;
  o.nu_bar_2 = s.nu2;
  o.preempted_1 = s.preempted_1;
  o.preempted_2 = s.preempted_2;
  if (earlier(s.nu1, s.nu2)) {
    o.which_first = WhichFirst::First;
  } else if (earlier(s.nu2, s.nu1)) {
    o.which_first = WhichFirst::Second;
  } else {
    o.which_first = s.nu1 ? WhichFirst::Tie : WhichFirst::Neither;
  }
  if (s.nu1) {
    o.false_alarm_1 = *s.nu1 < k1;
    o.coupling_event_1 = not_later(s.nu1, s.nu2) && k2 <= *s.nu1 && *s.nu1 < k1;
    if (*s.nu1 >= k1) o.delay_1 = *s.nu1 - k1;
  }
  if (s.nu2) {
    o.false_alarm_2 = *s.nu2 < k2;
    o.coupling_event_2 = not_later(s.nu2, s.nu1) && k1 <= *s.nu2 && *s.nu2 < k2;
    if (*s.nu2 >= k2) o.delay_2 = *s.nu2 - k2;
  }
  return o;
}

const std::optional<VariantStops>& PairedTrial::get(Variant v) const noexcept {
  switch (v) {
    case Variant::Stie: return stie;
    case Variant::PrivateOnly: return private_only;
    case Variant::NoExchange: return no_exchange;
  }
  return stie;
}

PairedTrial simulate_trial(const StreamScenario& scenario, const Threshold& threshold,
                           std::uint64_t seed, std::span<const Variant> variants) {
  const auto wanted = [&](Variant v) {
    return std::find(variants.begin(), variants.end(), v) != variants.end();
  };
  const bool run_stie = wanted(Variant::Stie);
  const bool run_private = wanted(Variant::PrivateOnly);
  const bool run_noex = wanted(Variant::NoExchange);

  StreamGenerator gen(scenario, seed);
  PairedTrial trial;
  trial.k1 = gen.k1();
  trial.k2 = gen.k2();

  SubsystemDetector d1 = SubsystemDetector::initial(scenario.prior1);
  SubsystemDetector d2 = SubsystemDetector::initial(scenario.prior2);
  SrpState p1 = SrpState::initial(scenario.prior1);
  SrpState p2 = SrpState::initial(scenario.prior2);
  NoExState n1 = NoExState::initial(scenario.prior1, scenario.prior2);
  NoExState n2 = NoExState::initial(scenario.prior2, scenario.prior1);
  VariantStops priv_stops;
  VariantStops noex_stops;

  bool stie_done = !run_stie;
  bool priv_done = !run_private;
  bool noex_done = !run_noex;

  for (Step n = 1; n <= scenario.horizon; ++n) {
    if (stie_done && priv_done && noex_done) break;
    const Observation obs = gen.next();
    const double rx = scenario.model_x.log_likelihood_ratio(obs.x);
    const double ry = scenario.model_y.log_likelihood_ratio(obs.y);
    const double rz = scenario.model_z.log_likelihood_ratio(obs.z);

    if (!stie_done) {
      StieStep next = stie_step(d1, d2, StepEvidence{rx, ry, rz}, threshold);
      d1 = std::move(next.det1);
      d2 = std::move(next.det2);
      stie_done = d1.phase == Phase::Stopped && d2.phase == Phase::Stopped;
    }
    if (!priv_done) {
      if (!priv_stops.nu1) {
        p1 = srp_update(p1, rx);
        if (crosses(p1, threshold)) priv_stops.nu1 = n;
      }
      if (!priv_stops.nu2) {
        p2 = srp_update(p2, ry);
        if (crosses(p2, threshold)) priv_stops.nu2 = n;
      }
      priv_done = priv_stops.nu1 && priv_stops.nu2;
    }
    if (!noex_done) {
      if (!noex_stops.nu1) {
        n1 = noex_update(n1, rx, rz);
        if (n1.log_ratio() >= threshold.log_b) noex_stops.nu1 = n;
      }
      if (!noex_stops.nu2) {
        n2 = noex_update(n2, ry, rz);
        if (n2.log_ratio() >= threshold.log_b) noex_stops.nu2 = n;
      }
      noex_done = noex_stops.nu1 && noex_stops.nu2;
    }
  }

  const auto finish_race = [](VariantStops& s) {
    s.preempted_1 = earlier(s.nu2, s.nu1);
    s.preempted_2 = earlier(s.nu1, s.nu2);
  };
  if (run_stie) {
    trial.stie = VariantStops{d1.declared_at, d2.declared_at, d1.peer_declared_at.has_value(),
                              d2.peer_declared_at.has_value()};
  }
  if (run_private) {
    finish_race(priv_stops);
    trial.private_only = priv_stops;
  }
  if (run_noex) {
    finish_race(noex_stops);
    trial.no_exchange = noex_stops;
  }
  return trial;
}

const std::vector<TrialOutcome>& TrialBatch::of(Variant v) const {
  for (std::size_t i = 0; i < variants.size(); ++i) {
    if (variants[i] == v) return outcomes[i];
  }
  throw std::out_of_range(std::string("TrialBatch: variant not simulated: ") + to_string(v));
}

TrialBatch run_trials(const StreamScenario& scenario, const Threshold& threshold,
                      std::uint64_t n_trials, std::uint64_t seed,
                      std::span<const Variant> variants, unsigned threads) {
  if (n_trials == 0) throw std::invalid_argument("run_trials: n_trials must be >= 1");
  scenario.validate();
  TrialBatch batch;
  if (variants.empty()) {
    batch.variants = {Variant::Stie};
  } else {
    batch.variants.assign(variants.begin(), variants.end());
  }
  batch.outcomes.assign(batch.variants.size(), std::vector<TrialOutcome>(n_trials));

  const auto work = [&](std::uint64_t i) {
    const PairedTrial t = simulate_trial(scenario, threshold, derive_seed(seed, i), batch.variants);
    for (std::size_t v = 0; v < batch.variants.size(); ++v) {
      batch.outcomes[v][i] = classify_trial(i, t.k1, t.k2, *t.get(batch.variants[v]));
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_trials));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < n_trials; ++i) work(i);
    return batch;
  }
  constexpr std::uint64_t kChunk = 256;
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t begin = next.fetch_add(kChunk);
        if (begin >= n_trials) return;
        const std::uint64_t end = std::min(n_trials, begin + kChunk);
        for (std::uint64_t i = begin; i < end; ++i) work(i);
      }
    });
  }
  for (auto& th : pool) th.join();
  return batch;
}

Estimate proportion_estimate(std::uint64_t successes, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("proportion_estimate: n must be >= 1");
  const double nn = static_cast<double>(n);
  const double k = static_cast<double>(successes);
  Estimate e;
  e.value = k / nn;
  e.se = std::sqrt(e.value * (1.0 - e.value) / nn);
  using boost::math::beta_distribution;
  using boost::math::quantile;
  e.ci_lo = successes == 0 ? 0.0 : quantile(beta_distribution<>(k, nn - k + 1.0), 0.025);
  e.ci_hi = successes == n ? 1.0 : quantile(beta_distribution<>(k + 1.0, nn - k), 0.975);
  return e;
}

namespace {

// Neumaier-compensated running sums, fed in trial-index order.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

Estimate mean_estimate(double sum, double sum_sq, std::uint64_t count) {
  const double n = static_cast<double>(count);
  Estimate e;
  e.value = sum / n;
  const double var = count > 1 ? std::max(0.0, (sum_sq - n * e.value * e.value) / (n - 1.0)) : 0.0;
  e.se = std::sqrt(var / n);
  e.ci_lo = e.value - 1.959963984540054 * e.se;
  e.ci_hi = e.value + 1.959963984540054 * e.se;
  return e;
}

DelayMoments delay_moments(std::span<const TrialOutcome> outcomes, int subsystem) {
  DelayMoments dm;
  CompensatedSum s1, s2, s4;
  for (const auto& o : outcomes) {
    const auto& d = subsystem == 1 ? o.delay_1 : o.delay_2;
    if (!d) continue;
    const double v = static_cast<double>(*d);
    ++dm.count;
    s1.add(v);
    s2.add(v * v);
    s4.add(v * v * v * v);
  }
  if (dm.count > 0) {
    dm.m1 = mean_estimate(s1.value(), s2.value(), dm.count);
    dm.m2 = mean_estimate(s2.value(), s4.value(), dm.count);
  }
  return dm;
}

}  // namespace

AggregateMetrics aggregate(std::span<const TrialOutcome> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("aggregate: no outcomes");
  AggregateMetrics m;
  m.n_trials = outcomes.size();
  std::uint64_t fa1 = 0, fa2 = 0, xi1 = 0, xi2 = 0, pre = 0;
  for (const auto& o : outcomes) {
    fa1 += o.false_alarm_1;
    fa2 += o.false_alarm_2;
    xi1 += o.coupling_event_1;
    xi2 += o.coupling_event_2;
    pre += o.preempted_1;
    m.censored_1 += !o.nu_bar_1;
    m.censored_2 += !o.nu_bar_2;
    m.censored_count += !o.nu_bar_1 || !o.nu_bar_2;
  }
  m.fa_rate_1 = proportion_estimate(fa1, m.n_trials);
  m.fa_rate_2 = proportion_estimate(fa2, m.n_trials);
  m.xi_1 = proportion_estimate(xi1, m.n_trials);
  m.xi_2 = proportion_estimate(xi2, m.n_trials);
  m.delta_hat = proportion_estimate(pre, m.n_trials);
  m.delay_1 = delay_moments(outcomes, 1);
  m.delay_2 = delay_moments(outcomes, 2);
  return m;
}

ExponentFit fit_coupling_exponent(std::span<const std::pair<double, double>> alpha_xi) {
  ExponentFit fit;
  std::vector<double> xs, ys;
  for (const auto& [alpha, xi] : alpha_xi) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("fit_coupling_exponent: alpha must lie in (0, 1)");
    }
    if (xi > 0.0) {
      xs.push_back(std::log(alpha));
      ys.push_back(std::log(xi));
    } else {
      fit.excluded_alphas.push_back(alpha);
    }
  }
  if (xs.size() < 3) {
    throw std::invalid_argument("fit_coupling_exponent: need at least 3 points with xi > 0");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_coupling_exponent: alphas must differ");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    rss += r * r;
  }
  fit.points_used = xs.size();
  fit.stderr_slope = std::sqrt(rss / (n - 2.0) / sxx);
  const double t = boost::math::quantile(boost::math::students_t(n - 2.0), 0.975);
  fit.ci_lo = fit.slope - t * fit.stderr_slope;
  fit.ci_hi = fit.slope + t * fit.stderr_slope;
  return fit;
}

Step default_horizon(const StreamScenario& scenario, double alpha) {
  const double d1 = scenario.prior1.tail_rate();
  const double d2 = scenario.prior2.tail_rate();
  const DelayConstants dc = delay_constants(alpha, info_profile(scenario.model_x),
                                            info_profile(scenario.model_y),
                                            info_profile(scenario.model_z), d1, d2);
  const double change = std::ceil(std::log(1e6) / std::min(d1, d2));
  const double delay = std::ceil(5.0 * std::max(dc.l1_tilde, dc.l2_tilde));
  constexpr double cap = 1e9;
  return static_cast<Step>(std::min(cap, change + delay));
}

const char* to_string(SweepParameter p) noexcept {
  switch (p) {
    case SweepParameter::Alpha: return "alpha";
    case SweepParameter::SigmaRatio: return "sigma_ratio";
    case SweepParameter::PriorRho: return "rho";
  }
  return "?";
}

const char* to_string(SeedPolicy p) noexcept {
  return p == SeedPolicy::Common ? "common" : "per-point";
}

void SweepSpec::validate() const {
  if (values.empty()) throw std::invalid_argument("SweepSpec: grid must be nonempty");
  if (trials_per_point < 100) {
    throw std::invalid_argument("SweepSpec: trials_per_point must be >= 100");
  }
  base.validate();
}

StreamScenario apply_sweep_value(const StreamScenario& base, SweepParameter parameter,
                                 double value) {
  StreamScenario s = base;
  switch (parameter) {
    case SweepParameter::Alpha:
      break;
    case SweepParameter::SigmaRatio: {
      if (!(value > 0.0)) throw std::invalid_argument("sigma_ratio must be > 0");
      const double s2 = base.model_z.sigma2() / value;
      s.model_x = GaussianShiftModel(base.model_x.mu0(), base.model_x.mu1(), s2);
      s.model_y = GaussianShiftModel(base.model_y.mu0(), base.model_y.mu1(), s2);
      break;
    }
    case SweepParameter::PriorRho:
      s.prior1 = GeometricPrior(value);
      s.prior2 = GeometricPrior(value);
      break;
  }
  return s;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  rows.reserve(spec.values.size());
  std::vector<Variant> variants{Variant::Stie};
  if (spec.compare_no_shared) variants.push_back(Variant::PrivateOnly);

  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    SweepRow row;
    row.value = spec.values[i];
    row.alpha = spec.parameter == SweepParameter::Alpha ? row.value : spec.alpha;
    StreamScenario scn = apply_sweep_value(spec.base, spec.parameter, row.value);
    if (spec.auto_horizon) scn.horizon = default_horizon(scn, row.alpha);
    row.horizon = scn.horizon;
    row.sigma_ratio = scn.model_z.sigma2() / scn.model_x.sigma2();
    const std::uint64_t seed =
        spec.seed_policy == SeedPolicy::Common ? spec.seed : derive_seed(spec.seed, 1000003 + i);

    const Threshold thr = make_threshold(row.alpha);
    const TrialBatch batch = run_trials(scn, thr, spec.trials_per_point, seed, variants,
                                        spec.threads);
    row.stie = aggregate(batch.of(Variant::Stie));
    if (spec.compare_no_shared) row.no_shared = aggregate(batch.of(Variant::PrivateOnly));

    const InfoProfile px = info_profile(scn.model_x);
    const InfoProfile py = info_profile(scn.model_y);
    const InfoProfile pz = info_profile(scn.model_z);
    const double d1 = scn.prior1.tail_rate();
    const double d2 = scn.prior2.tail_rate();
    row.theory = delay_constants(row.alpha, px, py, pz, d1, d2);
    row.coupling = coupling_rate(px, py, pz, d1, d2);
    row.predicted_delay = predicted_stie_delay(row.theory, row.stie.delta_hat.value, 1);

    if (!spec.exponent_alpha_grid.empty()) {
      for (std::size_t j = 0; j < spec.exponent_alpha_grid.size(); ++j) {
        const double a = spec.exponent_alpha_grid[j];
        StreamScenario sa = scn;
        if (spec.auto_horizon) sa.horizon = default_horizon(sa, a);
        const std::uint64_t s = derive_seed(seed, 7919 + j);
        const TrialBatch b = run_trials(sa, make_threshold(a), spec.trials_per_point, s,
                                        std::span<const Variant>(variants.data(), 1), spec.threads);
        row.exponent_points.emplace_back(a, aggregate(b.of(Variant::Stie)).xi_1.value);
      }
      try {
        row.exponent = fit_coupling_exponent(row.exponent_points);
      } catch (const std::invalid_argument&) {
        // Too few alphas with observed coupling events; the row keeps the raw points.
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace stie

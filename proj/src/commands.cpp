#include "stie/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <ostream>

#include "stie/csv.hpp"
#include "stie/sim.hpp"
#include "stie/svg.hpp"
#include "stie/theory.hpp"

namespace stie {

namespace fs = std::filesystem;

ExperimentConfig resolve(ExperimentConfig config, const CommandOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.threads) config.threads = *options.threads;
  return config;
}

std::vector<std::pair<std::string, std::string>> csv_metadata(const ExperimentConfig& config,
                                                              const std::string& command) {
  const StreamScenario scn = make_scenario(config);
  std::string conditioning = "none";
  if (config.change1 == ChangePolicy::Never || config.change2 == ChangePolicy::Never) {
    conditioning.clear();
    if (config.change1 == ChangePolicy::Never) conditioning += "lambda1>horizon";
    if (config.change2 == ChangePolicy::Never) {
      conditioning += conditioning.empty() ? "lambda2>horizon" : ";lambda2>horizon";
    }
  }
  return {
      {"command", command},
      {"config", to_json(config).dump()},
      {"seed", std::to_string(config.seed)},
      {"horizon", std::to_string(scn.horizon) + (config.horizon ? "" : " (default rule)")},
      {"conditioning", conditioning},
      {"delay_note", "delay moments use uncensored trials with nu >= lambda only"},
  };
}

namespace {

fs::path prepare_dir(const CommandOptions& options) {
  const fs::path dir = options.out_dir.value_or(fs::path("."));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
  return dir;
}

struct Profiles {
  InfoProfile x, y, z;
  double d1, d2;
};

Profiles profiles_of(const StreamScenario& s) {
  return {info_profile(s.model_x), info_profile(s.model_y), info_profile(s.model_z),
          s.prior1.tail_rate(), s.prior2.tail_rate()};
}

void put_rate(std::vector<std::pair<std::string, std::string>>& rows, const std::string& prefix,
              const CouplingRate& r) {
  rows.emplace_back(prefix + ".b1", format_double(r.b1));
  rows.emplace_back(prefix + ".w_star", format_double(r.w_star));
  rows.emplace_back(prefix + ".r_a", format_double(r.r_a));
  rows.emplace_back(prefix + ".r_b", r.r_b ? format_double(*r.r_b) : "");
  rows.emplace_back(prefix + ".r_star", format_double(r.r_star));
  rows.emplace_back(prefix + ".strong", r.strong ? "1" : "0");
  rows.emplace_back(prefix + ".case", to_string(r.which));
}

std::vector<std::string> metric_columns() {
  return {"variant",       "alpha",         "n_trials",      "fa_rate_1",     "fa_rate_1_se",
          "fa_rate_2",     "fa_rate_2_se",  "xi_1",          "xi_1_se",       "xi_2",
          "xi_2_se",       "delta_hat",     "delay_m1_1",    "delay_m1_1_se", "delay_m2_1",
          "delay_m2_1_se", "delay_m1_2",    "delay_m1_2_se", "delay_m2_2",    "delay_m2_2_se",
          "censored_count"};
}

void put_moment(CsvWriter& w, const std::optional<Estimate>& e) {
  if (e) {
    w.cell(e->value).cell(e->se);
  } else {
    w.cell(std::string()).cell(std::string());
  }
}

void write_trials(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& meta,
                  const std::vector<TrialOutcome>& outcomes) {
  CsvWriter w(path, meta,
              {"trial_index", "k1", "k2", "nu_bar_1", "nu_bar_2", "which_first", "false_alarm_1",
               "false_alarm_2", "coupling_1", "coupling_2", "delay_1", "delay_2"});
  for (const auto& o : outcomes) {
    w.cell(o.trial_index).cell(o.k1).cell(o.k2).cell(o.nu_bar_1).cell(o.nu_bar_2);
    w.cell(std::string(to_string(o.which_first)));
    w.cell(o.false_alarm_1).cell(o.false_alarm_2).cell(o.coupling_event_1).cell(o.coupling_event_2);
    w.cell(o.delay_1).cell(o.delay_2);
    w.end_row();
  }
  w.close();
}

}  // namespace

void cmd_theory(const ExperimentConfig& cfg_in, const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig cfg = resolve(cfg_in, options);
  const StreamScenario scn = make_scenario(cfg);
  const Profiles p = profiles_of(scn);

  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("alpha", format_double(cfg.alpha));
  rows.emplace_back("abs_log_alpha", format_double(std::abs(std::log(cfg.alpha))));
  rows.emplace_back("d1", format_double(p.d1));
  rows.emplace_back("d2", format_double(p.d2));
  for (const auto& [name, prof] : {std::pair{"x", p.x}, std::pair{"y", p.y}, std::pair{"z", p.z}}) {
    rows.emplace_back(std::string(name) + ".q1", format_double(prof.q1));
    rows.emplace_back(std::string(name) + ".q0", format_double(prof.q0));
    rows.emplace_back(std::string(name) + ".var_llr_pre", format_double(prof.var_llr_pre));
    rows.emplace_back(std::string(name) + ".var_llr_post", format_double(prof.var_llr_post));
  }
  const DelayConstants dc = delay_constants(cfg.alpha, p.x, p.y, p.z, p.d1, p.d2);
  rows.emplace_back("L1", format_double(dc.l1));
  rows.emplace_back("L1_tilde", format_double(dc.l1_tilde));
  rows.emplace_back("L2", format_double(dc.l2));
  rows.emplace_back("L2_tilde", format_double(dc.l2_tilde));
  rows.emplace_back("stie_delay_symmetric_prediction_1",
                    format_double(predicted_stie_delay(dc, 0.5, 1)));
  put_rate(rows, "coupling1", coupling_rate(p.x, p.y, p.z, p.d1, p.d2));
  put_rate(rows, "coupling2", coupling_rate(p.y, p.x, p.z, p.d2, p.d1));

  const double shift = cfg.x.mu0 - cfg.x.mu1;
  const bool common_shift = cfg.y.mu0 - cfg.y.mu1 == shift && cfg.z.mu0 - cfg.z.mu1 == shift;
  rows.emplace_back("gaussian_rule.applicable", common_shift ? "1" : "0");
  if (common_shift) {
    const StrongConditionReport g =
        gaussian_strong_condition(cfg.x.sigma2, cfg.y.sigma2, cfg.z.sigma2, shift, p.d1, p.d2);
    rows.emplace_back("gaussian_rule.holds", g.holds ? "1" : "0");
    rows.emplace_back("gaussian_rule.margin_x", format_double(g.margin_x));
    rows.emplace_back("gaussian_rule.margin_y", format_double(g.margin_y));
    put_rate(rows, "integral_kl.coupling1", g.rate1_integral);
    put_rate(rows, "integral_kl.coupling2", g.rate2_integral);
    put_rate(rows, "mean_square_kl.coupling1", g.rate1_mean_square);
    put_rate(rows, "mean_square_kl.coupling2", g.rate2_mean_square);
    rows.emplace_back("strong.integral_kl",
                      g.rate1_integral.strong && g.rate2_integral.strong ? "1" : "0");
    rows.emplace_back("strong.mean_square_kl",
                      g.rate1_mean_square.strong && g.rate2_mean_square.strong ? "1" : "0");
  }

  for (const auto& [k, v] : rows) out << k << " = " << v << '\n';

  if (options.out_dir) {
    const fs::path dir = prepare_dir(options);
    CsvWriter w(dir / "theory.csv", csv_metadata(cfg, "theory"), {"quantity", "value"});
    for (const auto& [k, v] : rows) w.cell(k).cell(v).end_row();
    w.close();
  }
}

void cmd_simulate(const ExperimentConfig& cfg_in, const CommandOptions& options,
                  std::ostream& out) {
  const ExperimentConfig cfg = resolve(cfg_in, options);
  const fs::path dir = prepare_dir(options);
  const StreamScenario scn = make_scenario(cfg);
  const std::vector<Variant> variants = variants_for(cfg.mode);
  const TrialBatch batch =
      run_trials(scn, make_threshold(cfg.alpha), cfg.n_trials, cfg.seed, variants, cfg.threads);
  const auto meta = csv_metadata(cfg, "simulate");

  write_trials(dir / "trials.csv", meta, batch.outcomes.front());
  for (std::size_t i = 1; i < variants.size(); ++i) {
    write_trials(dir / ("trials_" + std::string(to_string(variants[i])) + ".csv"), meta,
                 batch.outcomes[i]);
  }

  CsvWriter w(dir / "metrics.csv", meta, metric_columns());
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const AggregateMetrics m = aggregate(batch.outcomes[i]);
    w.cell(std::string(to_string(variants[i]))).cell(cfg.alpha).cell(m.n_trials);
    w.cell(m.fa_rate_1.value).cell(m.fa_rate_1.se).cell(m.fa_rate_2.value).cell(m.fa_rate_2.se);
    w.cell(m.xi_1.value).cell(m.xi_1.se).cell(m.xi_2.value).cell(m.xi_2.se);
    w.cell(m.delta_hat.value);
    put_moment(w, m.delay_1.m1);
    put_moment(w, m.delay_1.m2);
    put_moment(w, m.delay_2.m1);
    put_moment(w, m.delay_2.m2);
    w.cell(m.censored_count);
    w.end_row();
    out << to_string(variants[i]) << ": fa1=" << format_double(m.fa_rate_1.value)
        << " xi1=" << format_double(m.xi_1.value)
        << " delay1=" << (m.delay_1.m1 ? format_double(m.delay_1.m1->value) : "n/a")
        << " censored=" << m.censored_count << '\n';
  }
  w.close();
  out << "wrote " << (dir / "metrics.csv").string() << '\n';
}

void cmd_sweep(const ExperimentConfig& cfg_in, const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig cfg = resolve(cfg_in, options);
  if (!cfg.sweep) throw ConfigError("sweep", "missing required block for the sweep command");
  const SweepConfig& sc = *cfg.sweep;
  const fs::path dir = prepare_dir(options);

  SweepSpec spec{make_scenario(cfg), cfg.alpha, sc.parameter, sc.values, sc.trials_per_point,
                 cfg.seed, sc.seed_policy, sc.compare_no_shared, sc.alpha_grid,
                 !cfg.horizon, cfg.threads};
  const std::vector<SweepRow> rows = run_sweep(spec);
  const auto meta = csv_metadata(cfg, "sweep");

  CsvWriter w(dir / "sweep.csv", meta,
              {"parameter", "value", "alpha", "sigma_ratio", "horizon", "n_trials", "fa_rate_1",
               "fa_rate_1_se", "xi_1", "xi_1_se", "xi_2", "xi_2_se", "delta_hat", "delay_m1_1",
               "delay_m1_1_se", "delay_m2_1", "delay_m2_1_se", "no_shared_fa_rate_1",
               "no_shared_delay_m1_1", "no_shared_delay_m1_1_se", "L1", "L1_tilde", "L2",
               "L2_tilde", "predicted_delay_1", "b1", "w_star", "r_a", "r_b", "r_star",
               "coupling_case", "exponent_p", "exponent_p_se", "exponent_ci_lo",
               "exponent_ci_hi"});
  for (const SweepRow& r : rows) {
    const AggregateMetrics& m = r.stie;
    w.cell(std::string(to_string(sc.parameter))).cell(r.value).cell(r.alpha).cell(r.sigma_ratio);
    w.cell(r.horizon).cell(m.n_trials);
    w.cell(m.fa_rate_1.value).cell(m.fa_rate_1.se).cell(m.xi_1.value).cell(m.xi_1.se);
    w.cell(m.xi_2.value).cell(m.xi_2.se).cell(m.delta_hat.value);
    put_moment(w, m.delay_1.m1);
    put_moment(w, m.delay_1.m2);
    if (r.no_shared) {
      w.cell(r.no_shared->fa_rate_1.value);
      put_moment(w, r.no_shared->delay_1.m1);
    } else {
      w.cell(std::string()).cell(std::string()).cell(std::string());
    }
    w.cell(r.theory.l1).cell(r.theory.l1_tilde).cell(r.theory.l2).cell(r.theory.l2_tilde);
    w.cell(r.predicted_delay);
    w.cell(r.coupling.b1).cell(r.coupling.w_star).cell(r.coupling.r_a).cell(r.coupling.r_b);
    w.cell(r.coupling.r_star).cell(std::string(to_string(r.coupling.which)));
    if (r.exponent) {
      w.cell(r.exponent->slope).cell(r.exponent->stderr_slope);
      w.cell(r.exponent->ci_lo).cell(r.exponent->ci_hi);
    } else {
      for (int i = 0; i < 4; ++i) w.cell(std::string());
    }
    w.end_row();
  }
  w.close();
  out << "wrote " << (dir / "sweep.csv").string() << " (" << rows.size() << " rows)\n";

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  const auto opt_value = [&](const std::optional<Estimate>& e) { return e ? e->value : nan; };

  if (sc.parameter == SweepParameter::Alpha) {
    CsvWriter p(dir / "plot_coupling_vs_alpha.csv", meta, {"alpha", "xi_1", "alpha_pow_r_star"});
    Series emp{"empirical xi_1", {}, {}}, th{"alpha^r*", {}, {}};
    for (const SweepRow& r : rows) {
      const double bound = std::pow(r.alpha, r.coupling.r_star);
      p.cell(r.alpha).cell(r.stie.xi_1.value).cell(bound).end_row();
      emp.x.push_back(r.alpha);
      emp.y.push_back(r.stie.xi_1.value);
      th.x.push_back(r.alpha);
      th.y.push_back(bound);
    }
    p.close();
    if (options.svg) {
      write_line_chart(dir / "plot_coupling_vs_alpha.svg", "Error coupling vs alpha", "alpha",
                       "xi_1", {emp, th}, true, true);
    }
  }
  if (sc.parameter == SweepParameter::SigmaRatio) {
    CsvWriter p(dir / "plot_delay_vs_ratio.csv", meta,
                {"sigma_ratio", "stie_delay", "no_shared_delay", "theory_stie_delay",
                 "theory_no_shared_delay"});
    Series s1{"STIE", {}, {}}, s2{"no shared", {}, {}}, s3{"theory STIE", {}, {}},
        s4{"theory no shared", {}, {}};
    for (const SweepRow& r : rows) {
      const double stie_delay = opt_value(r.stie.delay_1.m1);
      const double ns_delay = r.no_shared ? opt_value(r.no_shared->delay_1.m1) : nan;
      p.cell(r.sigma_ratio).cell(stie_delay);
      if (std::isnan(ns_delay)) {
        p.cell(std::string());
      } else {
        p.cell(ns_delay);
      }
      p.cell(r.predicted_delay).cell(r.theory.l1_tilde).end_row();
      for (auto* s : {&s1, &s2, &s3, &s4}) s->x.push_back(r.sigma_ratio);
      s1.y.push_back(stie_delay);
      s2.y.push_back(ns_delay);
      s3.y.push_back(r.predicted_delay);
      s4.y.push_back(r.theory.l1_tilde);
    }
    p.close();
    if (options.svg) {
      write_line_chart(dir / "plot_delay_vs_ratio.svg", "Mean delay vs uncertainty ratio",
                       "sigma_Z^2 / sigma_S^2", "delay", {s1, s2, s3, s4});
    }
  }
  if (!sc.alpha_grid.empty()) {
    CsvWriter p(dir / "plot_exponent_vs_ratio.csv", meta,
                {"sigma_ratio", "exponent_p", "r_star"});
    Series emp{"fitted p", {}, {}}, th{"r*", {}, {}};
    for (const SweepRow& r : rows) {
      p.cell(r.sigma_ratio);
      if (r.exponent) {
        p.cell(r.exponent->slope);
      } else {
        p.cell(std::string());
      }
      p.cell(r.coupling.r_star).end_row();
      emp.x.push_back(r.sigma_ratio);
      emp.y.push_back(r.exponent ? r.exponent->slope : nan);
      th.x.push_back(r.sigma_ratio);
      th.y.push_back(r.coupling.r_star);
    }
    p.close();
    if (options.svg) {
      write_line_chart(dir / "plot_exponent_vs_ratio.svg", "Coupling exponent vs ratio",
                       "sigma_Z^2 / sigma_S^2", "exponent", {emp, th});
    }
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-subsystem sequential fault detection with one-bit exchange"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool svg = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
  };
  CLI::App* theory = app.add_subcommand("theory", "print closed-form predictions");
  CLI::App* simulate = app.add_subcommand("simulate", "run trials and write trials/metrics CSV");
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep and write plot data");
  for (CLI::App* sub : {theory, simulate, sweep}) add_common(sub);
  sweep->add_flag("--svg", svg, "also write SVG line charts");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  CommandOptions options;
  options.svg = svg;
  for (CLI::App* sub : {theory, simulate, sweep}) {
    if (!sub->parsed()) continue;
    if (sub->count("--out")) options.out_dir = out_dir;
    if (sub->count("--seed")) options.seed = seed;
    if (sub->count("--threads")) options.threads = threads;
  }

  try {
    const ExperimentConfig cfg = load_config(config_path);
    if (theory->parsed()) {
      cmd_theory(cfg, options, out);
    } else if (simulate->parsed()) {
      cmd_simulate(cfg, options, out);
    } else {
      cmd_sweep(cfg, options, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace stie

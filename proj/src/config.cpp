#include "stie/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

namespace stie {

using nlohmann::json;

const char* to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Stie: return "stie";
    case Mode::PrivateOnly: return "private-only";
    case Mode::NoExchange: return "no-exchange";
    case Mode::All: return "all";
  }
  return "?";
}

std::vector<Variant> variants_for(Mode m) {
  switch (m) {
    case Mode::Stie: return {Variant::Stie};
    case Mode::PrivateOnly: return {Variant::PrivateOnly};
    case Mode::NoExchange: return {Variant::NoExchange};
    case Mode::All: return {Variant::Stie, Variant::PrivateOnly, Variant::NoExchange};
  }
  return {};
}

namespace {

// A JSON object with a known key set and a dotted path for messages.
class Section {
 public:
  Section(const json& node, std::string path, std::initializer_list<const char*> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(label(), "expected an object");
    std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& item : node_.items()) {
      if (!known.count(item.key())) throw ConfigError(field(item.key()), "unknown key");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }

  const json& at(const char* key) const {
    if (!node_.contains(key)) throw ConfigError(field(key), "missing required field");
    return node_.at(key);
  }

  double real(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
    return d;
  }

  std::uint64_t count(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0)) {
      throw ConfigError(field(key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  bool flag(const char* key) const {
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> reals(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Section child(const char* key, std::initializer_list<const char*> allowed) const {
    return Section(at(key), field(key), allowed);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& node_;
  std::string path_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

StreamConfig parse_stream(const Section& scenario, const char* key) {
  const Section s = scenario.child(key, {"mu0", "mu1", "sigma2"});
  StreamConfig c{s.real("mu0"), s.real("mu1"), s.real("sigma2")};
  require(c.sigma2 > 0.0, s.field("sigma2"), "must be > 0");
  require(c.mu0 != c.mu1, s.field("mu1"), "must differ from mu0");
  return c;
}

ChangePolicy parse_policy(const Section& s, const char* key) {
  const std::string v = s.text(key);
  if (v == "sampled") return ChangePolicy::Sampled;
  if (v == "never") return ChangePolicy::Never;
  throw ConfigError(s.field(key), "expected \"sampled\" or \"never\"");
}

const char* policy_name(ChangePolicy p) { return p == ChangePolicy::Never ? "never" : "sampled"; }

double probability(const Section& s, const char* key) {
  const double v = s.real(key);
  require(v > 0.0 && v < 1.0, s.field(key), "must lie in (0, 1)");
  return v;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  const Section root(doc, "",
                     {"scenario", "alpha", "n_trials", "seed", "mode", "threads", "sweep"});
  ExperimentConfig c;

  const Section scn = root.child(
      "scenario", {"x", "y", "z", "rho1", "rho2", "horizon", "change1", "change2"});
  c.x = parse_stream(scn, "x");
  c.y = parse_stream(scn, "y");
  c.z = parse_stream(scn, "z");
  c.rho1 = probability(scn, "rho1");
  c.rho2 = probability(scn, "rho2");
  if (scn.has("horizon")) {
    const std::uint64_t h = scn.count("horizon");
    require(h >= 1 && h <= 1'000'000'000ULL, scn.field("horizon"), "must lie in [1, 1e9]");
    c.horizon = static_cast<Step>(h);
  }
  if (scn.has("change1")) c.change1 = parse_policy(scn, "change1");
  if (scn.has("change2")) c.change2 = parse_policy(scn, "change2");

  c.alpha = probability(root, "alpha");
  c.n_trials = root.count("n_trials");
  require(c.n_trials >= 1, "n_trials", "must be >= 1");
  c.seed = root.count("seed");

  const std::string mode = root.text("mode");
  bool matched = false;
  for (Mode m : {Mode::Stie, Mode::PrivateOnly, Mode::NoExchange, Mode::All}) {
    if (mode == to_string(m)) {
      c.mode = m;
      matched = true;
    }
  }
  require(matched, "mode", "expected one of stie, private-only, no-exchange, all");

  if (root.has("threads")) {
    const std::uint64_t t = root.count("threads");
    require(t <= 1024, "threads", "must be <= 1024");
    c.threads = static_cast<unsigned>(t);
  }

  if (root.has("sweep")) {
    const Section sw = root.child("sweep", {"parameter", "values", "trials_per_point",
                                            "alpha_grid", "seed_policy", "compare_no_shared"});
    SweepConfig s;
    const std::string p = sw.text("parameter");
    if (p == "alpha") {
      s.parameter = SweepParameter::Alpha;
    } else if (p == "sigma_ratio") {
      s.parameter = SweepParameter::SigmaRatio;
    } else if (p == "rho") {
      s.parameter = SweepParameter::PriorRho;
    } else {
      throw ConfigError(sw.field("parameter"), "expected alpha, sigma_ratio or rho");
    }
    s.values = sw.reals("values");
    require(!s.values.empty(), sw.field("values"), "must be nonempty");
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const double v = s.values[i];
      const std::string f = sw.field("values") + "[" + std::to_string(i) + "]";
      if (s.parameter == SweepParameter::SigmaRatio) {
        require(v > 0.0, f, "sigma_ratio must be > 0");
      } else {
        require(v > 0.0 && v < 1.0, f, "must lie in (0, 1)");
      }
    }
    s.trials_per_point = sw.count("trials_per_point");
    require(s.trials_per_point >= 100, sw.field("trials_per_point"), "must be >= 100");
    if (sw.has("alpha_grid")) {
      s.alpha_grid = sw.reals("alpha_grid");
      for (std::size_t i = 0; i < s.alpha_grid.size(); ++i) {
        require(s.alpha_grid[i] > 0.0 && s.alpha_grid[i] < 1.0,
                sw.field("alpha_grid") + "[" + std::to_string(i) + "]", "must lie in (0, 1)");
      }
      require(s.alpha_grid.empty() || s.alpha_grid.size() >= 3, sw.field("alpha_grid"),
              "needs at least 3 values for an exponent fit");
    }
    if (sw.has("seed_policy")) {
      const std::string sp = sw.text("seed_policy");
      if (sp == "per-point") {
        s.seed_policy = SeedPolicy::PerPoint;
      } else if (sp == "common") {
        s.seed_policy = SeedPolicy::Common;
      } else {
        throw ConfigError(sw.field("seed_policy"), "expected per-point or common");
      }
    }
    if (sw.has("compare_no_shared")) s.compare_no_shared = sw.flag("compare_no_shared");
    c.sweep = std::move(s);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  const auto stream = [](const StreamConfig& s) {
    return json{{"mu0", s.mu0}, {"mu1", s.mu1}, {"sigma2", s.sigma2}};
  };
  json scn = {{"x", stream(c.x)},        {"y", stream(c.y)},
              {"z", stream(c.z)},        {"rho1", c.rho1},
              {"rho2", c.rho2},          {"change1", policy_name(c.change1)},
              {"change2", policy_name(c.change2)}};
  if (c.horizon) scn["horizon"] = *c.horizon;
  json doc = {{"scenario", scn},       {"alpha", c.alpha},         {"n_trials", c.n_trials},
              {"seed", c.seed},        {"mode", to_string(c.mode)}, {"threads", c.threads}};
  if (c.sweep) {
    const SweepConfig& s = *c.sweep;
    json sw = {{"parameter", to_string(s.parameter)},
               {"values", s.values},
               {"trials_per_point", s.trials_per_point},
               {"seed_policy", to_string(s.seed_policy)},
               {"compare_no_shared", s.compare_no_shared}};
    if (!s.alpha_grid.empty()) sw["alpha_grid"] = s.alpha_grid;
    doc["sweep"] = sw;
  }
  return doc;
}

StreamScenario make_scenario(const ExperimentConfig& c, double alpha) {
  StreamScenario s{GaussianShiftModel(c.x.mu0, c.x.mu1, c.x.sigma2),
                   GaussianShiftModel(c.y.mu0, c.y.mu1, c.y.sigma2),
                   GaussianShiftModel(c.z.mu0, c.z.mu1, c.z.sigma2),
                   GeometricPrior(c.rho1),
                   GeometricPrior(c.rho2),
                   1,
                   c.change1,
                   c.change2};
  s.horizon = c.horizon ? *c.horizon : default_horizon(s, alpha);
  return s;
}

StreamScenario make_scenario(const ExperimentConfig& c) { return make_scenario(c, c.alpha); }

}  // namespace stie

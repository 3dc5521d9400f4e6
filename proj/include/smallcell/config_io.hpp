#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smallcell/cell_sizing.hpp"
#include "smallcell/errors.hpp"
#include "smallcell/geometry.hpp"
#include "smallcell/power_opt.hpp"
#include "smallcell/power_policy.hpp"
#include "smallcell/simulator.hpp"
#include "smallcell/speed_model.hpp"
#include "smallcell/traffic.hpp"
#include "smallcell/units.hpp"

namespace smallcell::io {

using nlohmann::json;

enum class Mode { analytic, optimize_power, cell_size, simulate, sweep_alpha, validate };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::analytic: return "analytic";
    case Mode::optimize_power: return "optimize-power";
    case Mode::cell_size: return "cell-size";
    case Mode::simulate: return "simulate";
    case Mode::sweep_alpha: return "sweep-alpha";
    case Mode::validate: return "validate";
  }
  return "?";
}

inline Mode mode_from_name(const std::string& s) {
  if (s == "analytic") return Mode::analytic;
  if (s == "optimize-power") return Mode::optimize_power;
  if (s == "cell-size") return Mode::cell_size;
  if (s == "simulate") return Mode::simulate;
  if (s == "sweep-alpha") return Mode::sweep_alpha;
  if (s == "validate") return Mode::validate;
  throw ConfigError("config: unknown mode '" + s + "'");
}

/// Recipe for building a power policy once geometry/traffic are known
/// (the optimal kinds derive their coefficients from the metric constants).
struct PolicySpec {
  enum class Kind { equal, alpha_rule, optimal_linear, optimal_discrete, discrete_explicit };
  Kind kind = Kind::equal;
  double p_bar = 0.0;
  double alpha = 1.0;
  int classes = 1;
  std::vector<double> cuts_mps;   // interior class cuts, m/s
  std::vector<double> powers;     // explicit per-class powers

  PowerPolicy build(const CellGeometry& geom, const TrafficModel& traffic,
                    const SpeedModel& speed) const {
    switch (kind) {
      case Kind::equal:
        return PowerPolicy::equal(p_bar);
      case Kind::alpha_rule:
        return PowerPolicy::alpha_rule(p_bar, alpha, speed.mean_speed());
      case Kind::optimal_linear:
        return continuous_optimal_power(geom, traffic, speed, p_bar);
      case Kind::optimal_discrete: {
        auto cls = SpeedClasses::uniform_partition(speed, classes);
        auto pw = discrete_optimal_power(geom, traffic, cls, p_bar);
        return PowerPolicy::discrete(std::move(cls), std::move(pw));
      }
      case Kind::discrete_explicit: {
        auto cls = SpeedClasses::split_at(speed, cuts_mps);
        return PowerPolicy::discrete(std::move(cls), powers);
      }
    }
    return PowerPolicy::equal(p_bar);
  }
};

/// Simulation-section fields (everything SimConfig needs beyond the shared
/// geometry/traffic/speed/policy).
struct SimSection {
  int towers = 1;
  double delta_s = 0.01;
  std::vector<double> rate_set;  // empty => derive region rates at p_bar
  bool interference = false;
  std::optional<double> sigma2;
  std::optional<double> warmup_s;
  double horizon_s = 0.0;
  std::uint64_t seed = 1;
};

struct ExperimentSpec {
  Mode mode = Mode::analytic;
  CellGeometry geom;
  TrafficModel traffic;
  SpeedModel speed;
  PolicySpec policy;
  std::optional<SimSection> sim_section;

  int replications = 1;
  std::vector<std::uint64_t> seeds;  // one per replication, distinct
  std::string out_path;
  std::vector<double> alphas;   // sweep-alpha grid
  std::vector<double> p_bars;   // simulate sweep axis
  std::vector<double> betas;    // simulate sweep axis
  std::optional<ScalingSpec> scaling;       // cell-size
  std::optional<std::pair<double, double>> bracket_m;
  int speed_classes = 1;        // optimize-power

  std::vector<std::string> warnings;

  ExperimentSpec(CellGeometry g, TrafficModel t, SpeedModel s)
      : geom(std::move(g)), traffic(std::move(t)), speed(std::move(s)) {}

  /// Materialize a SimConfig for one grid point. NaN overrides keep the
  /// config's own value; `alpha_override` >= 0 switches the policy to the
  /// alpha rule at that alpha.
  sim::SimConfig make_sim_config(std::uint64_t seed, double p_bar_override,
                                 double beta_override, double alpha_override) const {
    if (!sim_section) throw ConfigError("config: this mode requires a \"sim\" section");
    const SimSection& ss = *sim_section;
    CellGeometry g = std::isnan(beta_override)
                         ? geom
                         : CellGeometry(geom.half_length(), geom.num_regions(), geom.phi(),
                                        geom.lossless_d0(), beta_override);
    PolicySpec ps = policy;
    if (!std::isnan(p_bar_override)) ps.p_bar = p_bar_override;
    if (alpha_override >= 0.0) {
      ps.kind = PolicySpec::Kind::alpha_rule;
      ps.alpha = alpha_override;
    }
    PowerPolicy pol = ps.build(g, traffic, speed);
    std::vector<double> rates = ss.rate_set;
    if (rates.empty()) rates = region_rates(g, ps.p_bar);
    const double warmup =
        ss.warmup_s ? *ss.warmup_s : sim::SimConfig::default_warmup(ss.horizon_s, g, speed);
    sim::SimConfig cfg(std::move(g), traffic, speed, std::move(pol), std::move(rates),
                       ss.towers, ss.delta_s, warmup, ss.horizon_s);
    cfg.interference_enabled = ss.interference;
    cfg.sigma2 = ss.sigma2;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::string& path,
                                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("config: unknown key '" + path + it.key() + "'");
    }
  }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("config: missing required key '" + path + key + "'");
  return *it;
}

inline double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("config: '" + where + "' must be a number");
  return v.get<double>();
}

inline int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError("config: '" + where + "' must be an integer");
  return v.get<int>();
}

inline double opt_num(const json& obj, const char* key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : num(*it, path + key);
}

/// Expand a rate-set entry: either a plain number or "start:step:stop"
/// (inclusive arithmetic progression, negative steps descend).
inline void expand_rate_entry(const json& entry, std::vector<double>& out,
                              const std::string& where) {
  if (entry.is_number()) {
    out.push_back(entry.get<double>());
    return;
  }
  if (!entry.is_string()) {
    throw ConfigError("config: '" + where + "' entries must be numbers or \"start:step:stop\" strings");
  }
  const std::string s = entry.get<std::string>();
  const auto c1 = s.find(':');
  const auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw ConfigError("config: '" + where + "' range '" + s + "' must look like start:step:stop");
  }
  double start = 0.0, step = 0.0, stop = 0.0;
  try {
    start = std::stod(s.substr(0, c1));
    step = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    stop = std::stod(s.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ConfigError("config: '" + where + "' range '" + s + "' has non-numeric parts");
  }
  if (step == 0.0) throw ConfigError("config: '" + where + "' range step must be non-zero");
  const double count_f = (stop - start) / step;
  if (count_f < -1e-9) {
    throw ConfigError("config: '" + where + "' range '" + s + "' is empty (stop unreachable)");
  }
  const auto count = static_cast<long>(std::floor(count_f + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(start + static_cast<double>(k) * step);
}

}  // namespace detail

inline ExperimentSpec parse_config(const std::string& text, const std::string& origin);

/// Load and validate an experiment config. All invariants are checked
/// eagerly; unknown keys are hard errors; kmph fields convert to m/s here.
inline ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

inline ExperimentSpec parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line/column for a readable parse diagnostic
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config: " + origin + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
  detail::reject_unknown_keys(root, "", {"geometry", "traffic", "speed", "policy", "sim", "experiment"});

  using detail::integer;
  using detail::num;
  using detail::opt_num;
  using detail::require;

  // --- geometry ---
  const json& jg = require(root, "", "geometry");
  detail::reject_unknown_keys(jg, "geometry.",
                              {"half_length_m", "num_regions", "lossless_d0_m", "pathloss_beta"});
  CellGeometry geom = CellGeometry::uniform_partition(
      num(require(jg, "geometry.", "half_length_m"), "geometry.half_length_m"),
      integer(require(jg, "geometry.", "num_regions"), "geometry.num_regions"),
      num(require(jg, "geometry.", "lossless_d0_m"), "geometry.lossless_d0_m"),
      num(require(jg, "geometry.", "pathloss_beta"), "geometry.pathloss_beta"));

  // --- speed ---
  const json& js = require(root, "", "speed");
  detail::reject_unknown_keys(js, "speed.",
                              {"kind", "v_min_kmph", "v_max_kmph", "mean_kmph", "variance_kmph2"});
  const std::string skind = require(js, "speed.", "kind").get<std::string>();
  const double vmin = kmph_to_mps(num(require(js, "speed.", "v_min_kmph"), "speed.v_min_kmph"));
  const double vmax = kmph_to_mps(num(require(js, "speed.", "v_max_kmph"), "speed.v_max_kmph"));
  SpeedModel speed = [&] {
    if (skind == "uniform") {
      if (js.count("mean_kmph") || js.count("variance_kmph2")) {
        throw ConfigError("config: speed.mean_kmph/variance_kmph2 apply only to truncated_gaussian");
      }
      return SpeedModel::uniform_interval(vmin, vmax);
    }
    if (skind == "truncated_gaussian") {
      const double mean = js.count("mean_kmph")
                              ? kmph_to_mps(num(js["mean_kmph"], "speed.mean_kmph"))
                              : 0.5 * (vmin + vmax);
      const double var =
          kmph2_to_mps2(num(require(js, "speed.", "variance_kmph2"), "speed.variance_kmph2"));
      return SpeedModel::truncated_gaussian(vmin, vmax, mean, var);
    }
    throw ConfigError("config: speed.kind must be 'uniform' or 'truncated_gaussian'");
  }();

  // --- traffic ---
  const json& jt = require(root, "", "traffic");
  detail::reject_unknown_keys(jt, "traffic.",
                              {"lambda_per_meter", "mu_per_byte", "handover_bytes", "servers",
                               "arrival_pi"});
  std::vector<double> pi;
  if (jt.count("arrival_pi")) {
    if (!jt["arrival_pi"].is_array()) throw ConfigError("config: traffic.arrival_pi must be an array");
    for (const auto& v : jt["arrival_pi"]) pi.push_back(num(v, "traffic.arrival_pi[]"));
  } else {
    pi = TrafficModel::uniform_position_pi(geom);
  }
  TrafficModel traffic(
      num(require(jt, "traffic.", "lambda_per_meter"), "traffic.lambda_per_meter"),
      num(require(jt, "traffic.", "mu_per_byte"), "traffic.mu_per_byte"),
      num(require(jt, "traffic.", "handover_bytes"), "traffic.handover_bytes"),
      integer(require(jt, "traffic.", "servers"), "traffic.servers"), std::move(pi));
  if (traffic.num_regions() != geom.num_regions()) {
    throw ConfigError("config: traffic.arrival_pi must have 2 * geometry.num_regions entries");
  }

  ExperimentSpec spec(std::move(geom), std::move(traffic), std::move(speed));
  for (const auto& w : spec.traffic.warnings()) spec.warnings.push_back(w);

  // --- policy ---
  const json& jp = require(root, "", "policy");
  detail::reject_unknown_keys(jp, "policy.",
                              {"kind", "p_bar", "alpha", "classes", "cuts_kmph", "powers"});
  const std::string pkind = require(jp, "policy.", "kind").get<std::string>();
  spec.policy.p_bar = num(require(jp, "policy.", "p_bar"), "policy.p_bar");
  if (!(spec.policy.p_bar > 0.0)) throw ConfigError("config: policy.p_bar must be positive");
  if (pkind == "equal") {
    spec.policy.kind = PolicySpec::Kind::equal;
  } else if (pkind == "alpha_rule") {
    spec.policy.kind = PolicySpec::Kind::alpha_rule;
    spec.policy.alpha = num(require(jp, "policy.", "alpha"), "policy.alpha");
  } else if (pkind == "optimal_linear") {
    spec.policy.kind = PolicySpec::Kind::optimal_linear;
  } else if (pkind == "optimal_discrete") {
    spec.policy.kind = PolicySpec::Kind::optimal_discrete;
    spec.policy.classes = integer(require(jp, "policy.", "classes"), "policy.classes");
    if (spec.policy.classes < 1) throw ConfigError("config: policy.classes must be >= 1");
  } else if (pkind == "discrete") {
    spec.policy.kind = PolicySpec::Kind::discrete_explicit;
    const json& jc = require(jp, "policy.", "cuts_kmph");
    const json& jw = require(jp, "policy.", "powers");
    if (!jc.is_array() || !jw.is_array()) {
      throw ConfigError("config: policy.cuts_kmph and policy.powers must be arrays");
    }
    for (const auto& v : jc) spec.policy.cuts_mps.push_back(kmph_to_mps(num(v, "policy.cuts_kmph[]")));
    for (const auto& v : jw) spec.policy.powers.push_back(num(v, "policy.powers[]"));
    if (spec.policy.powers.size() != spec.policy.cuts_mps.size() + 1) {
      throw ConfigError("config: policy.powers must have one more entry than policy.cuts_kmph");
    }
  } else {
    throw ConfigError("config: policy.kind must be one of equal, alpha_rule, optimal_linear, "
                      "optimal_discrete, discrete");
  }
  // Build once eagerly so invariant violations surface at load time.
  spec.policy.build(spec.geom, spec.traffic, spec.speed).check_positive(spec.speed);

  // --- sim (optional) ---
  if (root.count("sim")) {
    const json& jm = root["sim"];
    detail::reject_unknown_keys(jm, "sim.",
                                {"towers", "delta_s", "rate_set", "interference", "sigma2",
                                 "warmup_s", "horizon_s", "seed"});
    SimSection ss;
    ss.towers = integer(require(jm, "sim.", "towers"), "sim.towers");
    ss.delta_s = num(require(jm, "sim.", "delta_s"), "sim.delta_s");
    ss.horizon_s = num(require(jm, "sim.", "horizon_s"), "sim.horizon_s");
    if (jm.count("warmup_s")) ss.warmup_s = num(jm["warmup_s"], "sim.warmup_s");
    if (jm.count("seed")) ss.seed = static_cast<std::uint64_t>(integer(jm["seed"], "sim.seed"));
    if (jm.count("interference")) {
      if (!jm["interference"].is_boolean()) throw ConfigError("config: sim.interference must be a boolean");
      ss.interference = jm["interference"].get<bool>();
    }
    if (jm.count("sigma2")) ss.sigma2 = num(jm["sigma2"], "sim.sigma2");
    if (jm.count("rate_set")) {
      if (!jm["rate_set"].is_array()) throw ConfigError("config: sim.rate_set must be an array");
      for (const auto& e : jm["rate_set"]) detail::expand_rate_entry(e, ss.rate_set, "sim.rate_set");
      if (ss.rate_set.empty()) throw ConfigError("config: sim.rate_set expanded to nothing");
      for (std::size_t i = 0; i + 1 < ss.rate_set.size(); ++i) {
        if (!(ss.rate_set[i] > ss.rate_set[i + 1])) {
          throw ConfigError("config: sim.rate_set must be strictly decreasing after expansion");
        }
      }
      for (double r : ss.rate_set) {
        if (!(r > 0.0)) throw ConfigError("config: sim.rate_set rates must be positive");
      }
    }
    spec.sim_section = std::move(ss);
  }

  // --- experiment ---
  if (root.count("experiment")) {
    const json& je = root["experiment"];
    detail::reject_unknown_keys(je, "experiment.",
                                {"mode", "replications", "seeds", "out", "alphas", "p_bars",
                                 "betas", "scaling", "bracket_m", "speed_classes"});
    if (je.count("mode")) spec.mode = mode_from_name(je["mode"].get<std::string>());
    if (je.count("replications")) {
      spec.replications = integer(je["replications"], "experiment.replications");
      if (spec.replications < 1) throw ConfigError("config: experiment.replications must be >= 1");
    }
    if (je.count("seeds")) {
      if (!je["seeds"].is_array()) throw ConfigError("config: experiment.seeds must be an array");
      for (const auto& v : je["seeds"]) {
        spec.seeds.push_back(static_cast<std::uint64_t>(integer(v, "experiment.seeds[]")));
      }
    }
    if (je.count("out")) spec.out_path = je["out"].get<std::string>();
    auto load_axis = [&](const char* key, std::vector<double>& out) {
      if (!je.count(key)) return;
      if (!je[key].is_array()) throw ConfigError(std::string("config: experiment.") + key + " must be an array");
      for (const auto& v : je[key]) out.push_back(num(v, std::string("experiment.") + key + "[]"));
    };
    load_axis("alphas", spec.alphas);
    load_axis("p_bars", spec.p_bars);
    load_axis("betas", spec.betas);
    if (je.count("scaling")) {
      const json& jsc = je["scaling"];
      detail::reject_unknown_keys(jsc, "experiment.scaling.", {"p_tilde", "gamma", "omega_p"});
      ScalingSpec sc;
      sc.p_tilde = num(require(jsc, "experiment.scaling.", "p_tilde"), "experiment.scaling.p_tilde");
      sc.gamma = num(require(jsc, "experiment.scaling.", "gamma"), "experiment.scaling.gamma");
      sc.omega_p = opt_num(jsc, "omega_p", 0.0, "experiment.scaling.");
      sc.validate();
      spec.scaling = sc;
    }
    if (je.count("bracket_m")) {
      const json& jb = je["bracket_m"];
      if (!jb.is_array() || jb.size() != 2) {
        throw ConfigError("config: experiment.bracket_m must be [lo, hi]");
      }
      spec.bracket_m = std::make_pair(num(jb[0], "experiment.bracket_m[0]"),
                                      num(jb[1], "experiment.bracket_m[1]"));
    }
    if (je.count("speed_classes")) {
      spec.speed_classes = integer(je["speed_classes"], "experiment.speed_classes");
      if (spec.speed_classes < 1) throw ConfigError("config: experiment.speed_classes must be >= 1");
    }
  }

  // Fill seed defaults and check mode requirements.
  if (spec.seeds.empty()) {
    const std::uint64_t base = spec.sim_section ? spec.sim_section->seed : 1;
    for (int i = 0; i < spec.replications; ++i) spec.seeds.push_back(base + static_cast<std::uint64_t>(i));
  } else if (static_cast<int>(spec.seeds.size()) != spec.replications) {
    spec.replications = static_cast<int>(spec.seeds.size());
  }
  {
    std::set<std::uint64_t> uniq(spec.seeds.begin(), spec.seeds.end());
    if (uniq.size() != spec.seeds.size()) throw ConfigError("config: experiment.seeds must be distinct");
  }
  const bool needs_sim = spec.mode == Mode::simulate || spec.mode == Mode::sweep_alpha ||
                         spec.mode == Mode::validate;
  if (needs_sim && !spec.sim_section) {
    throw ConfigError("config: mode '" + std::string(mode_name(spec.mode)) +
                      "' requires a \"sim\" section");
  }
  if (spec.mode == Mode::sweep_alpha && spec.alphas.empty()) {
    throw ConfigError("config: sweep-alpha requires a non-empty experiment.alphas list");
  }
  if (spec.mode == Mode::cell_size && !spec.scaling) {
    throw ConfigError("config: cell-size requires experiment.scaling");
  }
  return spec;
}

}  // namespace smallcell::io

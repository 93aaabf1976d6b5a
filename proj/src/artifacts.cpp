#include "ergogame/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace ergogame {
namespace {

// NaN stands for "not available" in the in-memory structs.
Json real_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(); }

Json state_or_null(StateIndex i) { return i == kNoState ? Json() : Json(i); }

double read_real_or_nan(const Json& j, const std::string& where) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : require_number(j, where);
}

StateIndex read_state_or_none(const Json& j, const std::string& where) {
  return j.is_null() ? kNoState : require_index(j, where);
}

StateIndex parse_state_key(const std::string& key, std::size_t n,
                           const std::string& where) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (key.empty() || pos != key.size() || v >= n) {
    throw FormatError(where + ": bad state key \"" + key + "\"");
  }
  return static_cast<StateIndex>(v);
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Json strategy_to_json(const GameModel& model, const StationaryStrategy& s,
                      bool player_one) {
  Json out = Json::object();
  for (StateIndex i = 0; i < model.num_states(); ++i) {
    if (!s.defined_at(i)) continue;
    const auto& labels = player_one ? model.actions_a(i) : model.actions_b(i);
    Json d = Json::object();
    for (std::size_t k = 0; k < labels.size(); ++k) d[labels[k]] = s.dist[i][k];
    out[std::to_string(i)] = std::move(d);
  }
  return out;
}

StationaryStrategy strategy_from_json(const GameModel& model, const Json& j,
                                      bool player_one,
                                      const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  StationaryStrategy s;
  s.dist.assign(model.num_states(), {});
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string w = where + "." + it.key();
    const StateIndex i = parse_state_key(it.key(), model.num_states(), where);
    const auto& labels = player_one ? model.actions_a(i) : model.actions_b(i);
    if (!it.value().is_object()) throw FormatError(w + ": expected an object");
    MixedAction d(labels.size(), 0.0);
    std::vector<char> seen(labels.size(), 0);
    for (auto e = it.value().begin(); e != it.value().end(); ++e) {
      const auto pos = std::find(labels.begin(), labels.end(), e.key());
      if (pos == labels.end()) {
        throw FormatError(w + ": unknown action \"" + e.key() + "\"");
      }
      const std::size_t k = pos - labels.begin();
      if (seen[k]) throw FormatError(w + ": repeated action \"" + e.key() + "\"");
      seen[k] = 1;
      d[k] = require_number(e.value(), w + "." + e.key());
      if (d[k] < 0.0) throw FormatError(w + "." + e.key() + ": negative");
    }
    double total = 0.0;
    for (double p : d) total += p;
    if (std::fabs(total - 1.0) > 1e-9) {
      throw FormatError(w + ": probabilities sum to " + g17(total));
    }
    s.dist[i] = std::move(d);
  }
  return s;
}

Json selectors_to_json(const GameModel& model, const SelectorPair& s) {
  Json j;
  j["pi1"] = strategy_to_json(model, s.pi1, true);
  j["pi2"] = strategy_to_json(model, s.pi2, false);
  j["max_duality_gap"] = s.max_duality_gap;
  return j;
}

StrategyPair selectors_from_json(const GameModel& model, const Json& j,
                                 const std::string& source) {
  StrategyPair p;
  p.pi1 = strategy_from_json(model, require_key(j, "pi1", source), true,
                             source + ".pi1");
  p.pi2 = strategy_from_json(model, require_key(j, "pi2", source), false,
                             source + ".pi2");
  return p;
}

Json solution_to_json(const GameModel& model, const EigenSolution& s,
                      const SelectorPair* selectors) {
  Json j;
  j["model"] = model.name();
  j["reference_state"] = model.reference_state();
  j["rho"] = s.rho;
  j["normalization"] = s.normalization;
  j["residual"] = s.residual;
  j["delta_used"] = s.delta_used;
  j["whole_space"] = s.whole_space;
  j["iterations"] = s.iterations;
  j["theta"] = s.theta;
  j["touch_state"] = state_or_null(s.touch_state);
  j["touch_in_drift_set"] = s.touch_in_drift_set;
  j["window"] = s.window;
  j["residual_excluded"] = s.residual_excluded;
  Json trace = Json::array();
  for (const LadderLevel& l : s.ladder_trace) {
    trace.push_back({{"n", l.n},
                     {"radius", l.radius},
                     {"domain_size", l.domain_size},
                     {"rho", l.rho},
                     {"residual", l.residual},
                     {"theta", l.theta},
                     {"touch_state", state_or_null(l.touch_state)},
                     {"iterations", l.iterations},
                     {"rho_change", real_or_null(l.rho_change)},
                     {"psi_change", real_or_null(l.psi_change)}});
  }
  j["ladder_trace"] = std::move(trace);
  Json psi = Json::object();
  for (StateIndex i : s.domain.states()) psi[std::to_string(i)] = s.psi[i];
  j["psi"] = std::move(psi);
  if (selectors) j["selectors"] = selectors_to_json(model, *selectors);
  return j;
}

EigenSolution solution_from_json(const GameModel& model, const Json& j,
                                 const std::string& source) {
  const std::size_t n = model.num_states();
  EigenSolution s;
  s.rho = require_number(require_key(j, "rho", source), source + ".rho");
  const Json& norm = require_key(j, "normalization", source);
  if (!norm.is_string()) {
    throw FormatError(source + ".normalization: expected a string");
  }
  s.normalization = norm.get<std::string>();
  s.residual =
      require_number(require_key(j, "residual", source), source + ".residual");
  s.delta_used = require_number(require_key(j, "delta_used", source),
                                source + ".delta_used");
  if (j.contains("whole_space")) s.whole_space = j["whole_space"].get<bool>();
  if (j.contains("theta")) s.theta = require_number(j["theta"], source + ".theta");
  if (j.contains("touch_state")) {
    s.touch_state = read_state_or_none(j["touch_state"], source + ".touch_state");
  }
  auto states = [&](const char* key) {
    std::vector<StateIndex> out;
    if (!j.contains(key)) return out;
    const Json& a = j[key];
    if (!a.is_array()) throw FormatError(source + "." + key + ": expected an array");
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string w = source + "." + key + "[" + std::to_string(k) + "]";
      const StateIndex i = require_index(a[k], w);
      if (i >= n) throw FormatError(w + ": out of range");
      out.push_back(i);
    }
    return out;
  };
  s.window = states("window");
  s.residual_excluded = states("residual_excluded");

  const Json& trace = require_key(j, "ladder_trace", source);
  if (!trace.is_array()) {
    throw FormatError(source + ".ladder_trace: expected an array");
  }
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const std::string w = source + ".ladder_trace[" + std::to_string(k) + "]";
    const Json& t = trace[k];
    LadderLevel l;
    l.n = require_index(require_key(t, "n", w), w + ".n");
    l.radius = require_index(require_key(t, "radius", w), w + ".radius");
    l.domain_size =
        require_index(require_key(t, "domain_size", w), w + ".domain_size");
    l.rho = require_number(require_key(t, "rho", w), w + ".rho");
    l.residual = require_number(require_key(t, "residual", w), w + ".residual");
    l.theta = require_number(require_key(t, "theta", w), w + ".theta");
    l.touch_state =
        read_state_or_none(require_key(t, "touch_state", w), w + ".touch_state");
    l.iterations =
        require_index(require_key(t, "iterations", w), w + ".iterations");
    l.rho_change =
        read_real_or_nan(require_key(t, "rho_change", w), w + ".rho_change");
    l.psi_change =
        read_real_or_nan(require_key(t, "psi_change", w), w + ".psi_change");
    s.ladder_trace.push_back(l);
  }

  const Json& psi = require_key(j, "psi", source);
  if (!psi.is_object() || psi.empty()) {
    throw FormatError(source + ".psi: expected a nonempty object");
  }
  s.psi.assign(n, 0.0);
  std::vector<StateIndex> dom;
  for (auto it = psi.begin(); it != psi.end(); ++it) {
    const StateIndex i = parse_state_key(it.key(), n, source + ".psi");
    s.psi[i] = require_number(it.value(), source + ".psi." + it.key());
    if (!(s.psi[i] > 0.0)) {
      throw FormatError(source + ".psi." + it.key() + ": must be positive");
    }
    dom.push_back(i);
  }
  s.domain = Domain(n, std::move(dom));
  if (!s.domain.contains(model.reference_state())) {
    throw FormatError(source + ".psi: reference state missing");
  }
  return s;
}

void write_ladder_csv(std::ostream& out, const EigenSolution& s) {
  out << "n,radius,rho_n,residual,theta_n,touch_state\n";
  for (const LadderLevel& l : s.ladder_trace) {
    out << l.n << ',' << l.radius << ',' << g17(l.rho) << ','
        << g17(l.residual) << ',' << g17(l.theta) << ',';
    if (l.touch_state != kNoState) out << l.touch_state;
    out << '\n';
  }
}

Json deviations_to_json(const DeviationReport& r) {
  Json j;
  j["rho"] = r.rho;
  j["tol_dev"] = r.tol_dev;
  j["tested"] = r.deviations.size();
  j["violations"] = r.violations;
  j["worst_slack_p1"] = real_or_null(r.worst_slack_p1);
  j["worst_slack_p2"] = real_or_null(r.worst_slack_p2);
  j["ok"] = r.ok;
  Json flagged = Json::array();
  for (const Deviation& d : r.deviations) {
    if (!d.violation) continue;
    flagged.push_back({{"state", d.state},
                       {"player", d.player},
                       {"action", d.label},
                       {"rho_deviated", d.rho_deviated},
                       {"slack", d.slack}});
  }
  j["flagged"] = std::move(flagged);
  return j;
}

Json spot_report_to_json(const SpotReport& r) {
  Json j;
  j["target"] = r.target;
  j["paths"] = r.paths;
  j["seed"] = r.seed;
  j["max_jumps"] = r.max_jumps;
  Json starts = Json::array();
  for (const SpotStart& s : r.starts) {
    starts.push_back({{"state", s.state},
                      {"estimate", s.estimate},
                      {"se", s.se},
                      {"bound", s.bound},
                      {"unabsorbed_fraction", s.unabsorbed_fraction},
                      {"ok", s.ok}});
  }
  j["starts"] = std::move(starts);
  j["ok"] = r.ok;
  j["caveat"] = r.caveat;
  return j;
}

Json bounds_to_json(const BoundsReport& r) {
  Json j;
  j["lower_bound"] = r.lower_bound;
  j["upper_bound"] = real_or_null(r.upper_bound);
  j["k1"] = r.k1;
  j["upper_applicable"] = r.upper_applicable;
  Json checks = Json::array();
  for (const BoundCheck& c : r.checks) {
    checks.push_back({{"level", c.level},
                      {"rho", c.rho},
                      {"lower_ok", c.lower_ok},
                      {"upper_ok", c.upper_ok}});
  }
  j["checks"] = std::move(checks);
  j["ok"] = r.ok;
  return j;
}

Json estimate_to_json(const RiskSensitiveEstimate& e) {
  Json j;
  j["j_hat"] = e.j_hat;
  j["horizon"] = e.horizon;
  j["paths"] = e.paths;
  j["seed"] = e.seed;
  j["start"] = e.start;
  j["mode"] = to_string(e.mode);
  j["max_exponent"] = e.max_exponent;
  j["log_sum_exp"] = e.log_sum_exp;
  j["effective_sample_size"] = e.effective_sample_size;
  j["bootstrap_se"] = e.bootstrap_se;
  j["bootstrap"] = e.bootstrap;
  j["mean_cost_rate"] = e.mean_cost_rate;
  j["exited"] = e.exited;
  j["exit_fraction"] = e.exit_fraction;
  j["refused"] = e.refused;
  return j;
}

Json validation_to_json(const ValidationReport& r) {
  Json j;
  j["ok"] = r.ok();
  j["reachable_from_reference"] = r.reachable_from_reference;
  j["irreducible"] = r.irreducible;
  Json v = Json::array();
  for (const Violation& x : r.violations) {
    v.push_back({{"kind", x.kind},
                 {"i", x.i},
                 {"a", x.a},
                 {"b", x.b},
                 {"j", x.j},
                 {"message", x.message}});
  }
  j["violations"] = std::move(v);
  return j;
}

Json drift_to_json(const DriftReport& r) {
  Json j;
  j["ok"] = r.ok;
  j["C"] = r.drift_constant;
  j["b0"] = r.growth_slope;
  j["b1"] = r.growth_offset;
  j["b2"] = r.rate_bound;
  j["worst_drift_slack"] = real_or_null(r.worst_drift_slack);
  j["worst_state"] = r.worst_state;
  j["norm_like_threshold"] = r.norm_like_threshold;
  j["norm_like_proxy_ok"] = r.norm_like_proxy_ok;
  Json bad = Json::array();
  for (const DriftStateReport& s : r.states) {
    if (s.verifiable && s.drift_slack <= 0.0 && s.growth_slack <= 0.0 &&
        s.rate_slack <= 0.0) {
      continue;
    }
    bad.push_back({{"i", s.i},
                   {"drift_slack", real_or_null(s.drift_slack)},
                   {"growth_slack", real_or_null(s.growth_slack)},
                   {"rate_slack", real_or_null(s.rate_slack)},
                   {"worst_a", s.worst_a},
                   {"worst_b", s.worst_b},
                   {"verifiable", s.verifiable}});
  }
  j["failing_states"] = std::move(bad);
  return j;
}

}  // namespace ergogame

#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ergogame/artifacts.hpp"
#include "ergogame/domain.hpp"
#include "ergogame/eigen.hpp"
#include "ergogame/matrix_game.hpp"
#include "ergogame/model.hpp"
#include "ergogame/model_io.hpp"
#include "ergogame/policy_eval.hpp"
#include "ergogame/simulate.hpp"
#include "ergogame/strategy.hpp"

namespace ergogame::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string model;    // model file path
  std::string builtin;  // or a builtin name
  BirthDeathParams birth_death;
  std::vector<std::size_t> radii = {25, 50, 100, 200};
  double delta = 1.0;
  double tol_eigen = 1e-9;
  double tol_ladder = 1e-3;
  double tol_dev = 1e-6;
  double horizon = 50.0;
  std::size_t paths = 100000;
  std::optional<std::uint64_t> seed;
  std::optional<StateIndex> start;
  std::string mode = "expected";
  std::size_t bootstrap = 200;
  std::size_t trajectories = 0;
  std::vector<double> profile;
  std::optional<double> rho;
  bool evaluate = false;
  std::string solution;   // directory holding psi.json / selectors.json
  std::string selectors;  // explicit selectors file
  std::size_t mc_paths = 0;
  StateIndex drift_first = 0;
  std::string save;
  // Not part of the resolved config: neither changes any result.
  std::string out = ".";
  std::optional<unsigned> threads;
};

Json birth_death_to_json(const BirthDeathParams& p) {
  Json j;
  j["lambda_hat"] = p.lambda_hat;
  j["mu_hat"] = p.mu_hat;
  j["fee"] = p.fee;
  j["alpha"] = p.alpha;
  j["max_state"] = p.max_state;
  j["grid_a"] = p.grid_a;
  j["grid_b"] = p.grid_b;
  j["penalty_a"] = p.penalty_a;
  j["penalty_b"] = p.penalty_b;
  j["closed"] = p.closed;
  j["zero_cost"] = p.zero_cost;
  return j;
}

Json config_to_json(const RunConfig& c, const std::string& command) {
  Json j;
  j["command"] = command;
  j["model"] = c.model;
  j["builtin"] = c.builtin;
  j["birth_death"] = birth_death_to_json(c.birth_death);
  j["radii"] = c.radii;
  j["delta"] = c.delta;
  j["tol_eigen"] = c.tol_eigen;
  j["tol_ladder"] = c.tol_ladder;
  j["tol_dev"] = c.tol_dev;
  j["horizon"] = c.horizon;
  j["paths"] = c.paths;
  j["seed"] = c.seed ? Json(*c.seed) : Json();
  j["start"] = c.start ? Json(*c.start) : Json();
  j["mode"] = c.mode;
  j["bootstrap"] = c.bootstrap;
  j["trajectories"] = c.trajectories;
  Json prof = Json::array();
  for (double t : c.profile) prof.push_back(t);
  j["profile"] = std::move(prof);
  j["rho"] = c.rho ? Json(*c.rho) : Json();
  j["evaluate"] = c.evaluate;
  j["solution"] = c.solution;
  j["selectors"] = c.selectors;
  j["mc_paths"] = c.mc_paths;
  j["drift_first"] = c.drift_first;
  j["save"] = c.save;
  return j;
}

// Reads a config file with the same keys as config.resolved.json, plus
// "out" and "threads".
void apply_config_file(RunConfig& c, const std::string& path) {
  const Json j = read_json_file(path);
  if (!j.is_object()) throw FormatError(path + ": expected an object");
  auto str = [&](const Json& v, const std::string& k) {
    if (!v.is_string()) throw FormatError(path + "." + k + ": expected a string");
    return v.get<std::string>();
  };
  auto boolean = [&](const Json& v, const std::string& k) {
    if (!v.is_boolean()) {
      throw FormatError(path + "." + k + ": expected a boolean");
    }
    return v.get<bool>();
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const Json& v = it.value();
    const std::string w = path + "." + k;
    if (k == "command") {
      continue;
    } else if (k == "model") {
      c.model = str(v, k);
    } else if (k == "builtin") {
      c.builtin = str(v, k);
    } else if (k == "birth_death") {
      if (!v.is_object()) throw FormatError(w + ": expected an object");
      BirthDeathParams& p = c.birth_death;
      for (auto b = v.begin(); b != v.end(); ++b) {
        const std::string wb = w + "." + b.key();
        if (b.key() == "lambda_hat") p.lambda_hat = require_number(*b, wb);
        else if (b.key() == "mu_hat") p.mu_hat = require_number(*b, wb);
        else if (b.key() == "fee") p.fee = require_number(*b, wb);
        else if (b.key() == "alpha") p.alpha = require_number(*b, wb);
        else if (b.key() == "max_state") p.max_state = require_index(*b, wb);
        else if (b.key() == "grid_a") p.grid_a = require_index(*b, wb);
        else if (b.key() == "grid_b") p.grid_b = require_index(*b, wb);
        else if (b.key() == "penalty_a") p.penalty_a = require_number(*b, wb);
        else if (b.key() == "penalty_b") p.penalty_b = require_number(*b, wb);
        else if (b.key() == "closed") p.closed = boolean(*b, b.key());
        else if (b.key() == "zero_cost") p.zero_cost = boolean(*b, b.key());
        else throw FormatError(wb + ": unknown key");
      }
    } else if (k == "radii") {
      if (!v.is_array()) throw FormatError(w + ": expected an array");
      c.radii.clear();
      for (std::size_t r = 0; r < v.size(); ++r) {
        c.radii.push_back(require_index(v[r], w));
      }
    } else if (k == "delta") {
      c.delta = require_number(v, w);
    } else if (k == "tol_eigen") {
      c.tol_eigen = require_number(v, w);
    } else if (k == "tol_ladder") {
      c.tol_ladder = require_number(v, w);
    } else if (k == "tol_dev") {
      c.tol_dev = require_number(v, w);
    } else if (k == "horizon") {
      c.horizon = require_number(v, w);
    } else if (k == "paths") {
      c.paths = require_index(v, w);
    } else if (k == "seed") {
      if (v.is_null()) c.seed.reset();
      else c.seed = require_index(v, w);
    } else if (k == "start") {
      if (v.is_null()) c.start.reset();
      else c.start = require_index(v, w);
    } else if (k == "mode") {
      c.mode = str(v, k);
    } else if (k == "bootstrap") {
      c.bootstrap = require_index(v, w);
    } else if (k == "trajectories") {
      c.trajectories = require_index(v, w);
    } else if (k == "profile") {
      if (!v.is_array()) throw FormatError(w + ": expected an array");
      c.profile.clear();
      for (const auto& t : v) c.profile.push_back(require_number(t, w));
    } else if (k == "rho") {
      if (v.is_null()) c.rho.reset();
      else c.rho = require_number(v, w);
    } else if (k == "evaluate") {
      c.evaluate = boolean(v, k);
    } else if (k == "solution") {
      c.solution = str(v, k);
    } else if (k == "selectors") {
      c.selectors = str(v, k);
    } else if (k == "mc_paths") {
      c.mc_paths = require_index(v, w);
    } else if (k == "drift_first") {
      c.drift_first = require_index(v, w);
    } else if (k == "save") {
      c.save = str(v, k);
    } else if (k == "out") {
      c.out = str(v, k);
    } else if (k == "threads") {
      c.threads = static_cast<unsigned>(require_index(v, w));
    } else {
      throw FormatError(w + ": unknown key");
    }
  }
}

void check_config(const RunConfig& c) {
  for (std::size_t k = 1; k < c.radii.size(); ++k) {
    if (c.radii[k] <= c.radii[k - 1]) {
      throw InputError("radii must be strictly increasing");
    }
  }
  if (c.radii.empty()) throw InputError("at least one radius is required");
  if (!(c.delta > 0.0)) throw InputError("delta must be positive");
  if (!(c.tol_eigen > 0.0) || !(c.tol_ladder > 0.0) || !(c.tol_dev > 0.0)) {
    throw InputError("tolerances must be positive");
  }
  if (c.mode != "expected" && c.mode != "realized") {
    throw InputError("mode must be expected or realized");
  }
}


unsigned resolve_threads(const RunConfig& c) {
  if (c.threads) return std::max(1u, *c.threads);
  if (const char* env = std::getenv("ERGOGAME_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return 1;
}

struct ResolvedModel {
  GameModel model;
  std::optional<LyapunovData> lyapunov;
};

ResolvedModel resolve_model(const RunConfig& c) {
  if (c.model.empty() == c.builtin.empty()) {
    throw InputError("give exactly one of --model and --builtin");
  }
  ResolvedModel r;
  if (!c.builtin.empty()) {
    if (c.builtin != "birth-death") {
      throw InputError("unknown builtin model \"" + c.builtin + "\"");
    }
    try {
      BirthDeath bd = build_birth_death(c.birth_death);
      r.model = std::move(bd.model);
      r.lyapunov = std::move(bd.lyapunov);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
    return r;
  }
  r.model = load_model(c.model, &r.lyapunov);
  return r;
}

// Scaling reference for models without drift data: V = 1 everywhere.
LyapunovData unit_lyapunov(const GameModel& model) {
  LyapunovData l;
  l.lyapunov.assign(model.num_states(), 1.0);
  l.drift_rate.assign(model.num_states(), 0.0);
  l.explosion_lyapunov.assign(model.num_states(), 1.0);
  l.drift_constant = 1.0;
  l.drift_set = {model.reference_state()};
  return l;
}

struct Run {
  std::string command;
  RunConfig config;
  unsigned threads = 1;
  std::vector<std::string> args;
  std::chrono::system_clock::time_point started;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  fs::path dir() const { return fs::path(config.out); }
  fs::path solution_dir() const {
    return config.solution.empty() ? dir() : fs::path(config.solution);
  }
  void write(const std::string& name, const std::string& text) const {
    write_text_file((dir() / name).string(), text);
  }
  void write_json(const std::string& name, const Json& j) const {
    write(name, to_json_text(j));
  }
};

std::string utc_stamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything that may differ between otherwise identical runs goes here.
void write_meta(const Run& run, int exit_code) {
  const auto now = std::chrono::system_clock::now();
  Json j;
  j["tool"] = "ergogame";
  j["version"] = kVersion;
  j["command"] = run.command;
  j["args"] = run.args;
  j["out"] = run.config.out;
  j["threads"] = run.threads;
  j["started_utc"] = utc_stamp(run.started);
  j["elapsed_seconds"] =
      std::chrono::duration<double>(now - run.started).count();
  j["exit_code"] = exit_code;
  run.write_json("run_meta.json", j);
}

void begin_outputs(const Run& run) {
  std::error_code ec;
  fs::create_directories(run.dir(), ec);
  if (ec) throw InputError("cannot create output directory " + run.config.out);
  run.write_json("config.resolved.json", config_to_json(run.config, run.command));
}

std::string g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

void print_trace(std::ostream& out, const EigenSolution& s) {
  for (const LadderLevel& l : s.ladder_trace) {
    out << "level " << l.n << "  radius " << l.radius << "  rho " << g(l.rho)
        << "  residual " << g(l.residual) << "  theta " << g(l.theta);
    if (l.touch_state != kNoState) out << "  touch " << l.touch_state;
    out << '\n';
  }
}

std::string ladder_csv(const EigenSolution& s) {
  std::ostringstream os;
  write_ladder_csv(os, s);
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_solve(const Run& run) {
  const RunConfig& c = run.config;
  ResolvedModel rm = resolve_model(c);
  const GameModel& model = rm.model;
  begin_outputs(run);

  const ValidationReport vr = validate_model(model);
  if (!vr.ok()) {
    Json report;
    report["validation"] = validation_to_json(vr);
    run.write_json("model_report.json", report);
    *run.err << "model validation failed: " << vr.violations.front().message
             << "\nreport: " << (run.dir() / "model_report.json").string()
             << '\n';
    return kInputError;
  }
  const LyapunovData lyap =
      rm.lyapunov ? *rm.lyapunov : unit_lyapunov(model);

  TruncationLadder ladder;
  try {
    ladder = TruncationLadder::balls(model, c.radii);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  LadderOptions opt;
  opt.eigen.tol = c.tol_eigen;
  opt.eigen.threads = run.threads;
  opt.ladder_tol = c.tol_ladder;

  EigenSolution sol;
  try {
    sol = ladder_limit(model, lyap, ladder, c.delta, opt);
  } catch (const LadderNotConverged& e) {
    run.write("rho_ladder.csv", ladder_csv(e.partial()));
    print_trace(*run.out, e.partial());
    *run.err << "ladder did not converge: " << e.what() << '\n';
    return kNotConverged;
  } catch (const EigenError& e) {
    *run.err << "eigen solve failed: " << e.what() << '\n';
    return kNotConverged;
  }

  const SelectorPair sel =
      extract_selectors(model, sol, 10.0 * c.tol_eigen, run.threads);
  run.write("rho_ladder.csv", ladder_csv(sol));
  run.write_json("psi.json", solution_to_json(model, sol, &sel));
  run.write_json("selectors.json", selectors_to_json(model, sel));
  print_trace(*run.out, sol);
  *run.out << "rho = " << g(sol.rho) << "  residual " << g(sol.residual)
           << "  max duality gap " << g(sel.max_duality_gap) << '\n';
  return kSuccess;
}

// States on which a stored solution's residual is meaningful.
std::vector<StateIndex> residual_states(const EigenSolution& s) {
  if (!s.whole_space) return s.domain.states();
  std::vector<StateIndex> out;
  for (StateIndex i : s.window) {
    if (!std::binary_search(s.residual_excluded.begin(),
                            s.residual_excluded.end(), i)) {
      out.push_back(i);
    }
  }
  return out;
}

int cmd_verify(const Run& run) {
  const RunConfig& c = run.config;
  ResolvedModel rm = resolve_model(c);
  const GameModel& model = rm.model;
  const fs::path psi_path = run.solution_dir() / "psi.json";
  const fs::path sel_path = c.selectors.empty()
                                ? run.solution_dir() / "selectors.json"
                                : fs::path(c.selectors);
  for (const fs::path& p : {psi_path, sel_path}) {
    if (!fs::exists(p)) throw InputError("missing artifact " + p.string());
  }
  const EigenSolution sol =
      solution_from_json(model, read_json_file(psi_path.string()),
                         psi_path.string());
  const StrategyPair pair = selectors_from_json(
      model, read_json_file(sel_path.string()), sel_path.string());
  try {
    validate_strategy(model, pair.pi1, true, sol.domain.states());
    validate_strategy(model, pair.pi2, false, sol.domain.states());
  } catch (const std::invalid_argument& e) {
    throw InputError(sel_path.string() + ": " + e.what());
  }
  begin_outputs(run);

  Json report;
  report["rho"] = sol.rho;
  report["domain_size"] = sol.domain.size();

  // Lower/upper eigenvalue bounds.
  const BoundsReport bounds =
      eigen_bounds_check(sol, model, rm.lyapunov ? &*rm.lyapunov : nullptr);
  report["bounds"] = bounds_to_json(bounds);

  // Residual of the stored pair, recomputed from scratch.
  const ResidualReport res = hji_residual(model, residual_states(sol), sol.rho,
                                          sol.psi, run.threads);
  const bool residual_ok = res.max <= c.tol_eigen;
  report["residual"] = {{"max_weighted", res.max},
                        {"max_abs", res.max_abs},
                        {"worst_state", res.worst_state == kNoState
                                            ? Json()
                                            : Json(res.worst_state)},
                        {"tol", c.tol_eigen},
                        {"ok", residual_ok}};

  // Minimax interchange: duality gap of the stored selectors in each local
  // game, relative to max(1, psi).
  const std::vector<double> costs = model_costs(model);
  double max_gap = 0.0;
  StateIndex gap_state = kNoState;
  for (StateIndex i : sol.domain.states()) {
    const Eigen::MatrixXd m = hji_matrix(model, i, sol.psi, costs);
    const double gap = duality_gap(m, pair.pi1.dist[i], pair.pi2.dist[i]) /
                       std::max(1.0, sol.psi[i]);
    if (gap > max_gap || gap_state == kNoState) {
      max_gap = gap;
      gap_state = i;
    }
  }
  const bool gap_ok = max_gap <= c.tol_dev;
  report["minimax_gap"] = {{"max", max_gap},
                           {"state", gap_state},
                           {"tol", c.tol_dev},
                           {"ok", gap_ok}};

  // Single-state deviations on the solution domain.
  const DeviationReport dev = deviation_sweep(model, pair.pi1, pair.pi2,
                                              sol.domain, c.tol_dev,
                                              run.threads);
  report["deviations"] = deviations_to_json(dev);
  std::ostringstream csv;
  write_deviations_csv(csv, dev);
  run.write("deviations.csv", csv.str());
  const double eval_gap = std::fabs(dev.rho - sol.rho);
  const bool eval_ok = eval_gap <= c.tol_dev;
  report["evaluation"] = {
      {"rho_pi", dev.rho}, {"abs_diff", eval_gap}, {"ok", eval_ok}};

  // Optional Monte Carlo spot check of the exit-time bound; advisory.
  if (c.mc_paths > 0) {
    if (!c.seed) throw InputError("--mc-paths needs --seed");
    if (!rm.lyapunov) throw InputError("--mc-paths needs Lyapunov data");
    const LyapunovData& ly = *rm.lyapunov;
    std::vector<StateIndex> starts;
    for (StateIndex i : sol.domain.states()) {
      if (starts.size() == 3) break;
      if (!ly.in_drift_set(i)) starts.push_back(i);
    }
    const SpotReport spot = exit_bound_spotcheck(
        model, ly, pair.pi1, pair.pi2, ly.drift_set, starts, c.mc_paths,
        *c.seed, 1000000, run.threads);
    Json sj = spot_report_to_json(spot);
    sj["advisory"] = true;
    report["spot_check"] = std::move(sj);
  }

  const bool ok = bounds.ok && residual_ok && gap_ok && dev.ok && eval_ok;
  report["ok"] = ok;
  run.write_json("verify_report.json", report);

  auto line = [&](const char* name, bool pass, const std::string& detail) {
    *run.out << (pass ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
  };
  line("bounds", bounds.ok,
       "lower " + g(bounds.lower_bound) + " upper " + g(bounds.upper_bound));
  line("residual", residual_ok, g(res.max));
  line("minimax-gap", gap_ok, g(max_gap));
  line("deviations", dev.ok,
       std::to_string(dev.violations) + " of " +
           std::to_string(dev.deviations.size()) + " flagged");
  line("evaluation", eval_ok, "rho_pi " + g(dev.rho));
  return ok ? kSuccess : kCertificateFailed;
}

int cmd_simulate(const Run& run) {
  const RunConfig& c = run.config;
  if (!c.seed) throw InputError("simulate needs --seed");
  if (!(c.horizon > 0.0)) throw InputError("horizon must be positive");
  if (c.paths < 2) throw InputError("need at least two paths");
  ResolvedModel rm = resolve_model(c);
  const GameModel& model = rm.model;
  const fs::path sel_path = c.selectors.empty()
                                ? run.solution_dir() / "selectors.json"
                                : fs::path(c.selectors);
  if (!fs::exists(sel_path)) {
    throw InputError("missing artifact " + sel_path.string());
  }
  const StrategyPair pair = selectors_from_json(
      model, read_json_file(sel_path.string()), sel_path.string());
  const StateIndex start = c.start ? *c.start : model.reference_state();
  if (start >= model.num_states()) throw InputError("start state out of range");
  begin_outputs(run);

  EstimateOptions opt;
  opt.mode = c.mode == "realized" ? CostMode::realized : CostMode::expected;
  opt.threads = run.threads;
  opt.bootstrap = c.bootstrap;
  RiskSensitiveEstimate est;
  try {
    est = estimate_J(model, pair.pi1, pair.pi2, start, c.horizon, c.paths,
                     *c.seed, opt);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  // Reference value for the z-score: explicit, evaluated, or the solution's.
  std::optional<double> rho = c.rho;
  std::string rho_source = rho ? "given" : "";
  if (c.evaluate) {
    EvalOptions eo;
    eo.require_irreducible = false;
    rho = evaluate_pair(model, pair.pi1, pair.pi2, Domain::all(model), eo)
              .rho_pi;
    rho_source = "evaluate_pair";
  } else if (!rho && fs::exists(run.solution_dir() / "psi.json")) {
    const Json sj = read_json_file((run.solution_dir() / "psi.json").string());
    rho = require_number(require_key(sj, "rho", "psi.json"), "psi.json.rho");
    rho_source = "solution";
  }

  Json j = estimate_to_json(est);
  if (rho) {
    j["rho"] = *rho;
    j["rho_source"] = rho_source;
    if (est.bootstrap_se > 0.0) j["z"] = (est.j_hat - *rho) / est.bootstrap_se;
  }
  if (c.profile.size() >= 2) {
    const HorizonProfile p = horizon_profile(model, pair.pi1, pair.pi2, start,
                                             c.profile, c.paths, *c.seed, opt);
    Json pj;
    Json list = Json::array();
    for (const auto& e : p.estimates) {
      list.push_back({{"horizon", e.horizon},
                      {"j_hat", e.j_hat},
                      {"bootstrap_se", e.bootstrap_se},
                      {"exit_fraction", e.exit_fraction}});
    }
    pj["estimates"] = std::move(list);
    pj["slope"] = p.slope;
    pj["extrapolated"] = p.extrapolated;
    j["profile"] = std::move(pj);
  }
  run.write_json("estimate.json", j);

  if (c.trajectories > 0) {
    const Simulator sim(model, pair.pi1, pair.pi2, opt.mode);
    for (std::size_t k = 0; k < std::min(c.trajectories, c.paths); ++k) {
      std::ostringstream os;
      write_trajectory_csv(os, model, sim.sample(start, c.horizon, *c.seed, k));
      run.write("trajectory_" + std::to_string(k) + ".csv", os.str());
    }
  }

  *run.out << "J_hat = " << g(est.j_hat) << "  SE = " << g(est.bootstrap_se)
           << "  exit fraction " << g(est.exit_fraction);
  if (rho) {
    *run.out << "  rho = " << g(*rho);
    if (est.bootstrap_se > 0.0) {
      *run.out << "  z = " << g((est.j_hat - *rho) / est.bootstrap_se);
    }
  }
  *run.out << '\n';
  if (est.refused) {
    *run.err << "estimate refused: exit fraction " << g(est.exit_fraction)
             << " exceeds " << g(opt.max_exit_fraction) << '\n';
    return kSimulationRefused;
  }
  return kSuccess;
}

int cmd_model_check(const Run& run) {
  const RunConfig& c = run.config;
  ResolvedModel rm = resolve_model(c);
  const GameModel& model = rm.model;
  begin_outputs(run);
  Json report;
  report["name"] = model.name();
  report["states"] = model.num_states();
  const ValidationReport vr = validate_model(model);
  report["validation"] = validation_to_json(vr);
  bool drift_ok = true;
  if (rm.lyapunov) {
    const ValidationReport lr = validate_lyapunov(model, *rm.lyapunov);
    report["lyapunov_validation"] = validation_to_json(lr);
    if (lr.ok()) {
      const DriftReport dr = check_drift(model, *rm.lyapunov, c.drift_first,
                                         model.num_states() - 1);
      report["drift"] = drift_to_json(dr);
      drift_ok = dr.ok;
    } else {
      drift_ok = false;
    }
  }
  run.write_json("model_report.json", report);
  if (!c.save.empty()) {
    save_model(model, c.save, rm.lyapunov ? &*rm.lyapunov : nullptr);
  }
  *run.out << (vr.ok() ? "PASS" : "FAIL") << " validation  "
           << vr.violations.size() << " violations\n";
  if (rm.lyapunov) *run.out << (drift_ok ? "PASS" : "FAIL") << " drift\n";
  if (!vr.ok()) return kInputError;
  return drift_ok ? kSuccess : kCertificateFailed;
}

// ---------------------------------------------------------------------------

// Raw flag values; copied into the config only when given.
struct Flags {
  std::string config, model, builtin, out, solution, selectors, mode, save;
  std::vector<std::size_t> radii;
  std::vector<double> profile;
  double delta = 0, tol_eigen = 0, tol_dev = 0, tol_ladder = 0, horizon = 0;
  double rho = 0;
  std::size_t paths = 0, bootstrap = 0, trajectories = 0, mc_paths = 0;
  std::size_t start = 0, drift_first = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::size_t bd_max_state = 0, bd_grid_a = 0, bd_grid_b = 0;
  double bd_lambda = 0, bd_mu = 0, bd_fee = 0, bd_alpha = 0;
  bool bd_closed = false, bd_zero_cost = false, evaluate = false;
};

using Applier = std::pair<CLI::Option*, std::function<void(RunConfig&)>>;

template <typename T, typename Set>
void flag(CLI::App* app, std::vector<Applier>& appliers, const std::string& name,
          T& target, const std::string& help, Set set) {
  CLI::Option* o = app->add_option(name, target, help);
  appliers.emplace_back(o, [&target, set](RunConfig& c) { set(c, target); });
}

void switch_flag(CLI::App* app, std::vector<Applier>& appliers,
                 const std::string& name, bool& target, const std::string& help,
                 std::function<void(RunConfig&)> set) {
  CLI::Option* o = app->add_flag(name, target, help);
  appliers.emplace_back(o, std::move(set));
}

void add_model_flags(CLI::App* app, Flags& f, std::vector<Applier>& ap) {
  flag(app, ap, "--model", f.model, "model JSON file",
       [](RunConfig& c, const std::string& v) { c.model = v; });
  flag(app, ap, "--builtin", f.builtin, "builtin model (birth-death)",
       [](RunConfig& c, const std::string& v) { c.builtin = v; });
  flag(app, ap, "--bd-max-state", f.bd_max_state, "birth-death state cap",
       [](RunConfig& c, std::size_t v) { c.birth_death.max_state = v; });
  flag(app, ap, "--bd-grid-a", f.bd_grid_a, "birth-death grid size, player 1",
       [](RunConfig& c, std::size_t v) { c.birth_death.grid_a = v; });
  flag(app, ap, "--bd-grid-b", f.bd_grid_b, "birth-death grid size, player 2",
       [](RunConfig& c, std::size_t v) { c.birth_death.grid_b = v; });
  flag(app, ap, "--bd-lambda", f.bd_lambda, "birth-death departure scale",
       [](RunConfig& c, double v) { c.birth_death.lambda_hat = v; });
  flag(app, ap, "--bd-mu", f.bd_mu, "birth-death arrival scale",
       [](RunConfig& c, double v) { c.birth_death.mu_hat = v; });
  flag(app, ap, "--bd-fee", f.bd_fee, "birth-death fee",
       [](RunConfig& c, double v) { c.birth_death.fee = v; });
  flag(app, ap, "--bd-alpha", f.bd_alpha, "birth-death state-0 kernel mass",
       [](RunConfig& c, double v) { c.birth_death.alpha = v; });
  switch_flag(app, ap, "--bd-closed", f.bd_closed,
              "fold mass beyond the cap back into the chain",
              [](RunConfig& c) { c.birth_death.closed = true; });
  switch_flag(app, ap, "--bd-zero-cost", f.bd_zero_cost, "set every cost to 0",
              [](RunConfig& c) { c.birth_death.zero_cost = true; });
}

void add_run_flags(CLI::App* app, Flags& f, std::vector<Applier>& ap) {
  app->add_option("--config", f.config, "config JSON file");
  flag(app, ap, "--out", f.out, "output directory",
       [](RunConfig& c, const std::string& v) { c.out = v; });
  flag(app, ap, "--threads", f.threads, "worker threads",
       [](RunConfig& c, unsigned v) { c.threads = v; });
  add_model_flags(app, f, ap);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Risk-sensitive ergodic zero-sum game solver", "ergogame"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags f;
  std::vector<Applier> ap;

  CLI::App* solve = app.add_subcommand("solve", "solve the ladder");
  add_run_flags(solve, f, ap);
  flag(solve, ap, "--radii", f.radii, "ladder radii, comma separated",
       [](RunConfig& c, const std::vector<std::size_t>& v) { c.radii = v; });
  ap.back().first->delimiter(',');
  flag(solve, ap, "--delta", f.delta, "cost shift margin",
       [](RunConfig& c, double v) { c.delta = v; });
  flag(solve, ap, "--tol-eigen", f.tol_eigen, "eigen residual tolerance",
       [](RunConfig& c, double v) { c.tol_eigen = v; });
  flag(solve, ap, "--tol-ladder", f.tol_ladder, "ladder agreement tolerance",
       [](RunConfig& c, double v) { c.tol_ladder = v; });

  CLI::App* verify = app.add_subcommand("verify", "certify a solution");
  add_run_flags(verify, f, ap);
  flag(verify, ap, "--solution", f.solution, "directory with psi.json",
       [](RunConfig& c, const std::string& v) { c.solution = v; });
  flag(verify, ap, "--selectors", f.selectors, "selectors file",
       [](RunConfig& c, const std::string& v) { c.selectors = v; });
  flag(verify, ap, "--tol-eigen", f.tol_eigen, "residual tolerance",
       [](RunConfig& c, double v) { c.tol_eigen = v; });
  flag(verify, ap, "--tol-dev", f.tol_dev, "deviation tolerance",
       [](RunConfig& c, double v) { c.tol_dev = v; });
  flag(verify, ap, "--mc-paths", f.mc_paths, "paths for the exit spot check",
       [](RunConfig& c, std::size_t v) { c.mc_paths = v; });
  flag(verify, ap, "--seed", f.seed, "seed for the spot check",
       [](RunConfig& c, std::uint64_t v) { c.seed = v; });

  CLI::App* simulate = app.add_subcommand("simulate", "estimate J by simulation");
  add_run_flags(simulate, f, ap);
  flag(simulate, ap, "--solution", f.solution, "directory with selectors.json",
       [](RunConfig& c, const std::string& v) { c.solution = v; });
  flag(simulate, ap, "--selectors", f.selectors, "selectors file",
       [](RunConfig& c, const std::string& v) { c.selectors = v; });
  flag(simulate, ap, "--horizon", f.horizon, "horizon T",
       [](RunConfig& c, double v) { c.horizon = v; });
  flag(simulate, ap, "--paths", f.paths, "number of paths N",
       [](RunConfig& c, std::size_t v) { c.paths = v; });
  flag(simulate, ap, "--seed", f.seed, "random seed (required)",
       [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  flag(simulate, ap, "--start", f.start, "start state (default i0)",
       [](RunConfig& c, std::size_t v) { c.start = v; });
  flag(simulate, ap, "--mode", f.mode, "expected or realized",
       [](RunConfig& c, const std::string& v) { c.mode = v; });
  flag(simulate, ap, "--bootstrap", f.bootstrap, "bootstrap replicates",
       [](RunConfig& c, std::size_t v) { c.bootstrap = v; });
  flag(simulate, ap, "--trajectories", f.trajectories,
       "dump the first K paths as CSV",
       [](RunConfig& c, std::size_t v) { c.trajectories = v; });
  flag(simulate, ap, "--profile", f.profile, "horizons for a 1/T profile",
       [](RunConfig& c, const std::vector<double>& v) { c.profile = v; });
  ap.back().first->delimiter(',');
  flag(simulate, ap, "--rho", f.rho, "reference value for the z-score",
       [](RunConfig& c, double v) { c.rho = v; });
  switch_flag(simulate, ap, "--evaluate", f.evaluate,
              "evaluate the pair on all stored states for the z-score",
              [](RunConfig& c) { c.evaluate = true; });

  CLI::App* model = app.add_subcommand("model", "model utilities");
  model->require_subcommand(1);
  CLI::App* check = model->add_subcommand("check", "validate a model");
  add_run_flags(check, f, ap);
  flag(check, ap, "--save", f.save, "write the model file here",
       [](RunConfig& c, const std::string& v) { c.save = v; });
  flag(check, ap, "--drift-first", f.drift_first, "first state of the drift check",
       [](RunConfig& c, std::size_t v) { c.drift_first = v; });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInputError;
  }

  Run r;
  r.args = args;
  r.started = std::chrono::system_clock::now();
  r.out = &out;
  r.err = &err;
  std::function<int(const Run&)> command;
  if (solve->parsed()) {
    r.command = "solve";
    command = cmd_solve;
  } else if (verify->parsed()) {
    r.command = "verify";
    command = cmd_verify;
  } else if (simulate->parsed()) {
    r.command = "simulate";
    command = cmd_simulate;
  } else {
    r.command = "model check";
    command = cmd_model_check;
  }

  int code = kInputError;
  bool outputs_ready = false;
  try {
    if (!f.config.empty()) apply_config_file(r.config, f.config);
    for (const auto& [opt, set] : ap) {
      if (opt->count() > 0) set(r.config);
    }
    check_config(r.config);
    r.threads = resolve_threads(r.config);
    code = command(r);
    outputs_ready = fs::exists(r.dir() / "config.resolved.json");
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const FormatError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  if (outputs_ready) write_meta(r, code);
  return code;
}

}  // namespace ergogame::cli

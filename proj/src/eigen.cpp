#include "ergogame/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ergogame/matrix_game.hpp"
#include "ergogame/parallel.hpp"

namespace ergogame {
namespace {

double sup_cost(const GameModel& model, const Domain& d) {
  double s = -INFINITY;
  for (StateIndex i : d.states()) {
    for (const auto& p : model.pairs(i)) s = std::max(s, p.cost);
  }
  return s;
}

std::string trace_text(const std::vector<double>& history) {
  std::ostringstream os;
  const std::size_t from = history.size() > 10 ? history.size() - 10 : 0;
  os << "residual trace (last " << history.size() - from << "):";
  for (std::size_t k = from; k < history.size(); ++k) {
    os << ' ' << history[k];
  }
  return os.str();
}

// Boundary-free states: every row stays inside `d` and nothing escapes.
bool interior(const GameModel& model, const Domain& d, StateIndex i) {
  for (const auto& p : model.pairs(i)) {
    if (p.escape > 0.0) return false;
    for (const auto& e : p.jumps) {
      if (!d.contains(e.j)) return false;
    }
  }
  return true;
}

}  // namespace

ResidualReport hji_residual(const GameModel& model,
                            const std::vector<StateIndex>& states, double rho,
                            const std::vector<double>& psi, unsigned threads) {
  const std::vector<double> costs = model_costs(model);
  ResidualReport r;
  r.per_state.assign(model.num_states(), 0.0);
  parallel_for(states.size(), threads, [&](std::size_t k) {
    const StateIndex i = states[k];
    const Eigen::MatrixXd m = hji_matrix(model, i, psi, costs);
    r.per_state[i] = std::fabs(solve_matrix_game_fast(m).value - rho * psi[i]);
  });
  for (StateIndex i : states) {
    const double w = r.per_state[i] / std::max(1.0, psi[i]);
    r.max_abs = std::max(r.max_abs, r.per_state[i]);
    if (r.worst_state == kNoState || w > r.max) {
      r.max = w;
      r.worst_state = i;
    }
  }
  return r;
}

EigenSolution dirichlet_eigenpair(const GameModel& model, const Domain& domain,
                                  double delta, const EigenOptions& options) {
  const StateIndex i0 = model.reference_state();
  if (!domain.contains(i0)) {
    throw EigenError("domain does not contain the reference state");
  }
  if (!(delta > 0.0)) throw EigenError("delta must be positive");
  const double top = sup_cost(model, domain);

  DirichletProblem problem;
  problem.domain = domain;
  problem.margin = delta;
  problem.shifted_cost = model_costs(model);
  for (double& c : problem.shifted_cost) c = (c - top) - delta;

  std::vector<double> g(model.num_states(), 0.0);
  if (!options.initial.empty()) {
    if (options.initial.size() != model.num_states()) {
      throw EigenError("initial iterate has wrong length");
    }
    for (StateIndex i : domain.states()) g[i] = std::max(0.0, options.initial[i]);
  } else {
    for (StateIndex i : domain.states()) g[i] = 1.0;
  }
  if (!(g[i0] > 0.0)) throw EigenError("initial iterate vanishes at i0");
  for (StateIndex i : domain.states()) g[i] /= g[i0];

  DirichletOptions inner;
  inner.method = options.method;
  inner.certify = false;
  inner.threads = options.threads;
  inner.tol = options.tol;

  std::vector<double> history;
  double best = INFINITY;
  std::size_t best_at = 0;
  double lambda = 0.0;
  std::vector<double> phi;
  EigenSolution s;
  s.domain = domain;
  s.delta_used = delta;

  for (std::size_t k = 0; k < options.max_iterations; ++k) {
    problem.source = g;
    if (!phi.empty()) inner.initial = phi;
    DirichletResult r = dirichlet_solve(model, problem, inner);
    phi = std::move(r.phi);
    lambda = phi[i0];
    if (!(lambda > 1e-300)) {
      throw EigenError(
          "power iterate vanished at the reference state; check that i0 is "
          "reachable within the domain");
    }
    double diff = 0.0;
    for (StateIndex i : domain.states()) {
      const double next = phi[i] / lambda;
      diff = std::max(diff, std::fabs(next - g[i]) / std::max(1.0, next));
      g[i] = next;
    }
    // With an exact inner solve the HJI residual equals |psi - g| / lambda.
    const double predicted = diff / lambda;
    history.push_back(predicted);
    s.iterations = k + 1;
    // Inner accuracy tracks the current scale of T g.
    inner.tol = std::max(0.25 * options.tol * lambda / delta, 1e-300);

    if (predicted <= 0.5 * options.tol) {
      s.rho = top + delta - 1.0 / lambda;
      s.psi = g;
      s.residual = hji_residual(model, domain.states(), s.rho, s.psi,
                                options.threads).max;
      history.back() = s.residual;
      if (s.residual <= options.tol) return s;
    }
    if (history.back() < 0.99 * best) {
      best = history.back();
      best_at = k;
    } else if (k - best_at >= options.stall_window) {
      throw EigenError("power iteration stagnated above tolerance; " +
                       trace_text(history));
    }
  }
  throw EigenError("power iteration hit the iteration cap; " +
                   trace_text(history));
}

BoundsReport eigen_bounds_check(const EigenSolution& solution,
                                const GameModel& model,
                                const LyapunovData* lyap) {
  BoundsReport r;
  const StateIndex i0 = model.reference_state();
  const std::size_t na = model.num_actions_a(i0), nb = model.num_actions_b(i0);
  Eigen::MatrixXd diag(na, nb);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) diag(a, b) = model.pair(i0, a, b).diagonal;
  }
  r.lower_bound = solve_matrix_game_fast(diag).value;
  if (lyap != nullptr && lyap->mode == DriftMode::unbounded_cost) {
    r.upper_applicable = true;
    for (StateIndex i = 0; i < model.num_states(); ++i) {
      r.k1 = std::max(r.k1, model.max_cost(i) - lyap->drift_rate[i]);
    }
    r.upper_bound = lyap->drift_constant + r.k1;
  }
  auto check = [&](std::size_t level, double rho) {
    BoundCheck c{level, rho, rho >= r.lower_bound,
                 !r.upper_applicable || rho <= r.upper_bound};
    r.checks.push_back(c);
  };
  if (solution.ladder_trace.empty()) {
    check(0, solution.rho);
  } else {
    for (const auto& l : solution.ladder_trace) check(l.n, l.rho);
  }
  r.ok = std::all_of(r.checks.begin(), r.checks.end(),
                     [](const BoundCheck& c) { return c.lower_ok && c.upper_ok; });
  return r;
}

EigenSolution lyapunov_scale(const EigenSolution& solution,
                             const LyapunovData& lyap) {
  double theta = INFINITY;
  StateIndex touch = kNoState;
  for (StateIndex i : solution.domain.states()) {
    if (solution.psi[i] > 0.0) {
      const double t = lyap.lyapunov[i] / solution.psi[i];
      if (t < theta) {
        theta = t;
        touch = i;
      }
    }
  }
  if (touch == kNoState) throw EigenError("psi vanishes on the domain");
  EigenSolution out = solution;
  for (double& v : out.psi) v *= theta;
  // Exact contact at the touch state.
  out.psi[touch] = lyap.lyapunov[touch];
  out.residual *= theta;
  out.theta = theta;
  out.touch_state = touch;
  out.touch_in_drift_set = lyap.in_drift_set(touch);
  out.normalization = "touches V";
  return out;
}

EigenSolution ladder_limit(const GameModel& model, const LyapunovData& lyap,
                           const TruncationLadder& ladder, double delta,
                           const LadderOptions& options) {
  if (ladder.domains.empty()) throw EigenError("empty ladder");
  const Domain& window = ladder.domains.front();
  std::vector<LadderLevel> trace;
  std::vector<double> prev_scaled;
  EigenSolution last;

  for (std::size_t n = 0; n < ladder.domains.size(); ++n) {
    const Domain& d = ladder.domains[n];
    EigenOptions eo = options.eigen;
    if (eo.initial.empty()) {
      eo.initial.assign(model.num_states(), 0.0);
      for (StateIndex i : d.states()) {
        eo.initial[i] = n > 0 && ladder.domains[n - 1].contains(i)
                            ? prev_scaled[i]
                            : lyap.lyapunov[i];
      }
    }
    EigenSolution sol = dirichlet_eigenpair(model, d, delta, eo);
    EigenSolution scaled = lyapunov_scale(sol, lyap);

    LadderLevel level;
    level.n = n + 1;
    level.radius = n < ladder.radii.size() ? ladder.radii[n] : d.size();
    level.domain_size = d.size();
    level.rho = sol.rho;
    level.residual = sol.residual;
    level.theta = scaled.theta;
    level.touch_state = scaled.touch_state;
    level.iterations = sol.iterations;
    if (n > 0) {
      level.rho_change = std::fabs(sol.rho - trace.back().rho);
      double change = 0.0;
      for (StateIndex i : window.states()) {
        change = std::max(change, std::fabs(scaled.psi[i] - prev_scaled[i]) /
                                      lyap.lyapunov[i]);
      }
      level.psi_change = change;
    }
    trace.push_back(level);
    prev_scaled = scaled.psi;
    last = std::move(sol);
  }

  last.whole_space = true;
  last.ladder_trace = trace;
  last.window = window.states();
  last.normalization = "psi(i0)=1";

  const bool exact = !model.conceptually_infinite() && !model.has_escape() &&
                     ladder.domains.back().covers_all();
  const LadderLevel& tail = trace.back();
  const bool settled = trace.size() >= 2 &&
                       tail.rho_change <= options.ladder_tol &&
                       tail.psi_change <= options.ladder_tol;
  if (!exact && !settled) {
    std::ostringstream os;
    os << "ladder exhausted without convergence:";
    for (const auto& l : trace) {
      os << " (n=" << l.n << ", rho=" << l.rho << ")";
    }
    throw LadderNotConverged(os.str(), last);
  }

  for (StateIndex i : window.states()) {
    if (!(last.psi[i] > 0.0)) {
      std::ostringstream os;
      os << "limit psi is not positive at state " << i
         << "; the model may not be irreducible";
      throw EigenError(os.str());
    }
  }

  // Whole-space residual on the window, excluding rows that leave the final
  // truncation.
  std::vector<StateIndex> inner;
  for (StateIndex i : window.states()) {
    if (interior(model, ladder.domains.back(), i)) {
      inner.push_back(i);
    } else {
      last.residual_excluded.push_back(i);
    }
  }
  last.residual = hji_residual(model, inner, last.rho, last.psi,
                               options.eigen.threads).max;
  if (last.residual > options.eigen.tol) {
    std::ostringstream os;
    os << "whole-space residual " << last.residual << " exceeds tolerance";
    throw EigenError(os.str());
  }
  return last;
}

SelectorPair extract_selectors(const GameModel& model,
                               const EigenSolution& solution, double tol,
                               unsigned threads) {
  const std::size_t n = model.num_states();
  const std::vector<double> costs = model_costs(model);
  SelectorPair s;
  s.domain = solution.domain;
  s.pi1.dist.resize(n);
  s.pi2.dist.resize(n);
  s.values.assign(n, 0.0);
  s.duality_gaps.assign(n, 0.0);
  std::vector<double> miss(n, 0.0);
  const auto& states = solution.domain.states();
  parallel_for(states.size(), threads, [&](std::size_t k) {
    const StateIndex i = states[k];
    const Eigen::MatrixXd m = hji_matrix(model, i, solution.psi, costs);
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    MatrixGameSolution g = solve_matrix_game(m, 1e-10 * scale);
    s.pi1.dist[i] = std::move(g.row_strategy);
    s.pi2.dist[i] = std::move(g.col_strategy);
    s.values[i] = g.value;
    s.duality_gaps[i] = g.duality_gap;
    miss[i] = std::fabs(g.value - solution.rho * solution.psi[i]) /
              std::max(1.0, solution.psi[i]);
  });
  for (StateIndex i = 0; i < n; ++i) {
    if (!solution.domain.contains(i)) {
      s.pi1.dist[i].assign(model.num_actions_a(i),
                           1.0 / static_cast<double>(model.num_actions_a(i)));
      s.pi2.dist[i].assign(model.num_actions_b(i),
                           1.0 / static_cast<double>(model.num_actions_b(i)));
      continue;
    }
    s.max_duality_gap = std::max(s.max_duality_gap, s.duality_gaps[i]);
  }
  for (StateIndex i : states) {
    if (miss[i] > tol) {
      std::ostringstream os;
      os << "selector value misses rho psi at state " << i << " by "
         << miss[i] * std::max(1.0, solution.psi[i]);
      throw EigenError(os.str());
    }
  }
  return s;
}

}  // namespace ergogame

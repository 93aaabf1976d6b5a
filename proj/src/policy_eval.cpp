#include "ergogame/policy_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "ergogame/parallel.hpp"
#include "ergogame/rng.hpp"

namespace ergogame {
namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Twisted {
  SparseMatrix m;
  std::vector<std::vector<std::size_t>> adjacency;
  double max_exit = 0.0;
  double scale = 0.0;
};

Twisted assemble(const GameModel& model, const StationaryStrategy& pi1,
                 const StationaryStrategy& pi2, const Domain& d) {
  const std::size_t n = d.size();
  Twisted t;
  t.adjacency.resize(n);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < n; ++k) {
    const StateIndex i = d.states()[k];
    if (!pi1.defined_at(i) || !pi2.defined_at(i)) {
      std::ostringstream os;
      os << "strategy undefined at state " << i;
      throw std::invalid_argument(os.str());
    }
    const MixedRow row = mix_row(model, i, pi1.dist[i], pi2.dist[i]);
    trip.emplace_back(k, k, row.diagonal + row.cost);
    t.scale = std::max(t.scale, std::fabs(row.diagonal) + row.cost);
    t.max_exit = std::max(t.max_exit, model.max_exit_rate(i));
    for (const auto& e : row.jumps) {
      if (!d.contains(e.j) || e.q <= 0.0) continue;
      trip.emplace_back(k, d.local(e.j), e.q);
      t.adjacency[k].push_back(d.local(e.j));
    }
  }
  t.m.resize(n, n);
  t.m.setFromTriplets(trip.begin(), trip.end());
  t.m.makeCompressed();
  return t;
}

struct Ratios {
  double lower = INFINITY;
  double upper = -INFINITY;
  double rho = 0.0;       // least-squares eigenvalue estimate
  double residual = 0.0;  // ||M x - rho x|| / ||x||, sup norms
};

Ratios ratios(const SparseMatrix& m, const Eigen::VectorXd& x) {
  const Eigen::VectorXd y = m * x;
  Ratios r;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (x(k) <= 0.0) continue;
    const double q = y(k) / x(k);
    r.lower = std::min(r.lower, q);
    r.upper = std::max(r.upper, q);
  }
  r.rho = x.dot(y) / x.squaredNorm();
  r.residual = (y - r.rho * x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
  return r;
}

void normalize_sup(Eigen::VectorXd& x) {
  const double s = x.cwiseAbs().maxCoeff();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw std::runtime_error("Perron iteration lost its iterate");
  }
  x /= s;
}

}  // namespace

std::vector<std::vector<std::size_t>> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& adjacency) {
  // Iterative Tarjan.
  const std::size_t n = adjacency.size();
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // node, next edge
  std::vector<std::vector<std::size_t>> out;
  std::size_t counter = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unset) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e < adjacency[v].size()) {
        const std::size_t w = adjacency[v][e++];
        if (index[w] == unset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) {
        low[call.back().first] = std::min(low[call.back().first], low[done]);
      }
      if (low[done] == index[done]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != done);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

PolicyEvaluation evaluate_pair(const GameModel& model,
                               const StationaryStrategy& pi1,
                               const StationaryStrategy& pi2,
                               const Domain& domain,
                               const EvalOptions& options) {
  if (domain.size() == 0) throw std::invalid_argument("empty domain");
  Twisted t = assemble(model, pi1, pi2, domain);
  const std::size_t n = domain.size();

  PolicyEvaluation ev;
  ev.domain = domain;
  for (const auto& comp : strongly_connected_components(t.adjacency)) {
    std::vector<StateIndex> states;
    for (std::size_t k : comp) states.push_back(domain.states()[k]);
    ev.components.push_back(std::move(states));
  }
  ev.irreducible = ev.components.size() == 1;
  if (!ev.irreducible && options.require_irreducible) {
    std::ostringstream os;
    os << "support graph of the strategy pair is reducible on the domain ("
       << ev.components.size() << " strongly connected components)";
    throw ReducibleSupport(os.str(), ev.components);
  }

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  if (!options.initial.empty()) {
    for (std::size_t k = 0; k < n; ++k) {
      const double v = options.initial[domain.states()[k]];
      if (v > 0.0 && std::isfinite(v)) x(k) = v;
    }
    normalize_sup(x);
  }

  Ratios r = ratios(t.m, x);
  std::size_t it = 0;
  if (options.method == PerronMethod::shifted_power) {
    const double s = t.max_exit > 0.0 ? 1.05 * t.max_exit : 1.0;
    while (r.residual > options.tol) {
      if (++it > options.max_iterations) {
        throw std::runtime_error("shifted power iteration hit the cap");
      }
      x = t.m * x + s * x;
      normalize_sup(x);
      r = ratios(t.m, x);
    }
  } else {
    // sigma stays above the Collatz-Wielandt upper bound of a positive
    // iterate, hence above rho, so (sigma I - M)^-1 is a nonnegative matrix.
    const double floor_gap = 1e-12 * (1.0 + t.scale);
    double sigma = INFINITY;
    SparseMatrix id(n, n);
    id.setIdentity();
    Eigen::SparseLU<SparseMatrix> lu;
    double best = INFINITY;
    std::size_t best_at = 0;
    while (r.residual > options.tol) {
      if (++it > options.max_iterations) {
        throw std::runtime_error("resolvent iteration hit the cap");
      }
      const double target =
          r.upper + std::max(r.upper - r.lower, floor_gap);
      if (target < sigma) {
        sigma = target;
        SparseMatrix a = sigma * id - t.m;
        lu.compute(a);
        if (lu.info() != Eigen::Success) {
          throw std::runtime_error("resolvent factorization failed");
        }
      }
      x = lu.solve(x);
      // Rounding can leave tiny negative entries where x is ~0.
      x = x.cwiseMax(0.0);
      normalize_sup(x);
      r = ratios(t.m, x);
      if (r.residual < 0.5 * best) {
        best = r.residual;
        best_at = it;
      } else if (it - best_at > 200) {
        std::ostringstream os;
        os << "resolvent iteration stalled at residual " << r.residual;
        throw std::runtime_error(os.str());
      }
    }
  }

  const StateIndex i0 = model.reference_state();
  if (domain.contains(i0) && x(domain.local(i0)) > 0.0) {
    x /= x(domain.local(i0));
  }
  ev.rho_pi = r.rho;
  ev.residual = r.residual;
  ev.iterations = it;
  ev.psi_pi.assign(model.num_states(), 0.0);
  for (std::size_t k = 0; k < n; ++k) ev.psi_pi[domain.states()[k]] = x(k);
  return ev;
}

DeviationReport deviation_sweep(const GameModel& model,
                                const StationaryStrategy& pi1,
                                const StationaryStrategy& pi2,
                                const Domain& domain, double tol_dev,
                                unsigned threads, const EvalOptions& options) {
  const PolicyEvaluation base = evaluate_pair(model, pi1, pi2, domain, options);
  DeviationReport rep;
  rep.rho = base.rho_pi;
  rep.tol_dev = tol_dev;
  // A pure action the strategy already plays is not a deviation.
  auto plays = [](const MixedAction& m, std::size_t k) { return m[k] == 1.0; };
  for (StateIndex i : domain.states()) {
    for (std::size_t a = 0; a < model.num_actions_a(i); ++a) {
      if (plays(pi1.dist[i], a)) continue;
      rep.deviations.push_back({i, 1, a, model.actions_a(i)[a]});
    }
    for (std::size_t b = 0; b < model.num_actions_b(i); ++b) {
      if (plays(pi2.dist[i], b)) continue;
      rep.deviations.push_back({i, 2, b, model.actions_b(i)[b]});
    }
  }
  EvalOptions dev_options = options;
  dev_options.require_irreducible = false;
  dev_options.initial = base.psi_pi;
  parallel_for(rep.deviations.size(), threads, [&](std::size_t k) {
    Deviation& d = rep.deviations[k];
    StationaryStrategy p1 = pi1, p2 = pi2;
    StationaryStrategy& mover = d.player == 1 ? p1 : p2;
    std::fill(mover.dist[d.state].begin(), mover.dist[d.state].end(), 0.0);
    mover.dist[d.state][d.action] = 1.0;
    d.rho_deviated = evaluate_pair(model, p1, p2, domain, dev_options).rho_pi;
    d.slack = d.player == 1 ? d.rho_deviated - rep.rho
                            : rep.rho - d.rho_deviated;
  });
  for (Deviation& d : rep.deviations) {
    d.violation = d.slack > tol_dev;
    if (d.violation) ++rep.violations;
    double& worst = d.player == 1 ? rep.worst_slack_p1 : rep.worst_slack_p2;
    worst = std::max(worst, d.slack);
  }
  rep.ok = rep.violations == 0;
  return rep;
}

void write_deviations_csv(std::ostream& out, const DeviationReport& report) {
  out << "state,player,action,rho_deviated,slack\n";
  char buf[64];
  for (const Deviation& d : report.deviations) {
    out << d.state << ',' << d.player << ',' << d.label << ',';
    std::snprintf(buf, sizeof buf, "%.17g", d.rho_deviated);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", d.slack);
    out << buf << '\n';
  }
}

SpotReport exit_bound_spotcheck(const GameModel& model,
                                const LyapunovData& lyap,
                                const StationaryStrategy& pi1,
                                const StationaryStrategy& pi2,
                                const std::vector<StateIndex>& target,
                                const std::vector<StateIndex>& starts,
                                std::size_t paths, std::uint64_t seed,
                                std::size_t max_jumps, unsigned threads) {
  const std::size_t ns = model.num_states();
  std::vector<bool> in_target(ns, false);
  for (StateIndex i : target) {
    if (i >= ns) throw std::invalid_argument("target state out of range");
    in_target[i] = true;
  }
  for (StateIndex i : lyap.drift_set) {
    if (!in_target[i]) {
      throw std::invalid_argument("target set must contain the drift set");
    }
  }
  for (StateIndex i : starts) {
    if (i >= ns || in_target[i]) {
      throw std::invalid_argument("start states must lie outside the target");
    }
    if (!pi1.defined_at(i) || !pi2.defined_at(i)) {
      throw std::invalid_argument("strategy undefined at a start state");
    }
  }
  if (paths < 2) throw std::invalid_argument("need at least two paths");

  // Cumulative jump tables of the mixed rows; the final slot is escape.
  struct Table {
    std::vector<StateIndex> to;
    std::vector<double> cum;
    double rate = 0.0;
  };
  std::vector<Table> tables(ns);
  for (StateIndex i = 0; i < ns; ++i) {
    if (!pi1.defined_at(i) || !pi2.defined_at(i)) continue;
    const MixedRow row = mix_row(model, i, pi1.dist[i], pi2.dist[i]);
    Table& t = tables[i];
    double acc = 0.0;
    for (const auto& e : row.jumps) {
      acc += e.q;
      t.to.push_back(e.j);
      t.cum.push_back(acc);
    }
    t.rate = -row.diagonal;
  }

  SpotReport rep;
  rep.target = target;
  rep.paths = paths;
  rep.seed = seed;
  rep.max_jumps = max_jumps;
  rep.caveat =
      "advisory: the exit functional can be heavy-tailed; the deterministic "
      "drift check is binding";

  for (std::size_t s = 0; s < starts.size(); ++s) {
    // log of exp(int l_hat) V at absorption; NaN when not absorbed.
    std::vector<double> logs(paths);
    parallel_for(paths, threads, [&](std::size_t p) {
      PathRng rng(seed, (static_cast<std::uint64_t>(s) << 40) | p);
      StateIndex i = starts[s];
      double integral = 0.0;
      for (std::size_t k = 0;; ++k) {
        if (in_target[i]) {
          logs[p] = integral + std::log(lyap.lyapunov[i]);
          return;
        }
        const Table& t = tables[i];
        if (k >= max_jumps || !(t.rate > 0.0) || t.cum.empty()) break;
        const auto u = rng.uniforms(static_cast<std::uint32_t>(k), 0);
        integral += lyap.rate(i) * exponential(u[0], t.rate);
        const double pick = u[1] * t.rate;
        const auto it = std::upper_bound(t.cum.begin(), t.cum.end(), pick);
        if (it == t.cum.end()) break;  // escape beyond the stored cap
        i = t.to[it - t.cum.begin()];
      }
      logs[p] = std::numeric_limits<double>::quiet_NaN();
    });
    double top = -INFINITY;
    std::size_t absorbed = 0;
    for (double l : logs) {
      if (std::isnan(l)) continue;
      ++absorbed;
      top = std::max(top, l);
    }
    SpotStart st;
    st.state = starts[s];
    st.bound = lyap.lyapunov[starts[s]];
    st.unabsorbed_fraction =
        1.0 - static_cast<double>(absorbed) / static_cast<double>(paths);
    if (absorbed >= 2) {
      double sum = 0.0, sum2 = 0.0;
      for (double l : logs) {
        if (std::isnan(l)) continue;
        const double w = std::exp(l - top);
        sum += w;
        sum2 += w * w;
      }
      const double m = static_cast<double>(absorbed);
      const double mean = sum / m;
      const double var = std::max(0.0, sum2 / m - mean * mean);
      st.estimate = std::exp(top) * mean;
      st.se = std::exp(top) * std::sqrt(var / (m - 1.0));
      st.ok = st.unabsorbed_fraction == 0.0 &&
              st.estimate <= st.bound + 3.0 * st.se * st.bound / st.estimate;
    }
    rep.ok = rep.ok && st.ok;
    rep.starts.push_back(st);
  }
  return rep;
}

}  // namespace ergogame

#include "ergogame/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "ergogame/matrix_game.hpp"
#include "ergogame/parallel.hpp"
#include "ergogame/strategy.hpp"

namespace ergogame {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double sup_norm(std::span<const double> v, const Domain& d) {
  double m = 0.0;
  for (StateIndex i : d.states()) m = std::max(m, std::fabs(v[i]));
  return m;
}

double sup_diff(std::span<const double> a, std::span<const double> b,
                const Domain& d) {
  double m = 0.0;
  for (StateIndex i : d.states()) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// Entries of F at state i split as base + x * slope.
struct FParts {
  Eigen::MatrixXd base;
  Eigen::MatrixXd slope;
  double row_mass = 0.0;  // max over pairs of sum_{j != i, j in D} q
};

FParts f_parts(const GameModel& model, const DirichletProblem& problem,
               StateIndex i, std::span<const double> y) {
  const std::size_t na = model.num_actions_a(i);
  const std::size_t nb = model.num_actions_b(i);
  FParts f{Eigen::MatrixXd(na, nb), Eigen::MatrixXd(na, nb), 0.0};
  const Domain& d = problem.domain;
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t k = model.pair_index(i, a, b);
      const ActionPairData& p = model.pair_at(k);
      double s = 0.0;
      double mass = 0.0;
      for (const auto& e : p.jumps) {
        if (!d.contains(e.j)) continue;
        s += y[e.j] * e.q;
        mass += e.q;
      }
      f.base(a, b) = s;
      f.slope(a, b) = p.diagonal + problem.shifted_cost[k];
      f.row_mass = std::max(f.row_mass, mass);
    }
  }
  return f;
}

std::vector<double> masked(std::span<const double> v, const Domain& d) {
  std::vector<double> out(d.num_states(), 0.0);
  for (StateIndex i : d.states()) out[i] = v[i];
  return out;
}

std::string at_state(const char* what, StateIndex i) {
  std::ostringstream os;
  os << what << " at state " << i;
  return os.str();
}

}  // namespace

const char* to_string(DirichletMethod m) {
  switch (m) {
    case DirichletMethod::jacobi:
      return "jacobi";
    case DirichletMethod::gauss_seidel:
      return "gauss-seidel";
    case DirichletMethod::policy:
      return "policy";
  }
  return "?";
}

void check_problem(const GameModel& model, const DirichletProblem& problem) {
  if (problem.domain.num_states() != model.num_states()) {
    throw DirichletError("domain does not match the model");
  }
  if (problem.shifted_cost.size() != model.num_pairs()) {
    throw DirichletError("shifted cost has wrong length");
  }
  if (problem.source.size() != model.num_states()) {
    throw DirichletError("source has wrong length");
  }
  if (!(problem.margin > 0.0)) throw DirichletError("margin must be positive");
  if (problem.domain.size() == 0) throw DirichletError("empty domain");
  for (StateIndex i : problem.domain.states()) {
    for (std::size_t k = model.pair_offset(i);
         k < model.pair_offset(i) + model.pairs(i).size(); ++k) {
      if (!(problem.shifted_cost[k] <= -problem.margin)) {
        throw DirichletError(
            at_state("shifted cost exceeds -margin (bracket failure)", i));
      }
    }
  }
  for (StateIndex i = 0; i < model.num_states(); ++i) {
    if (!problem.domain.contains(i) && problem.source[i] != 0.0) {
      throw DirichletError(at_state("source nonzero outside the domain", i));
    }
  }
}

double contraction_bound(const GameModel& model,
                         const DirichletProblem& problem) {
  double alpha = 0.0;
  for (StateIndex i : problem.domain.states()) {
    for (std::size_t k = model.pair_offset(i);
         k < model.pair_offset(i) + model.pairs(i).size(); ++k) {
      const double q = -model.pair_at(k).diagonal;
      alpha = std::max(alpha, q / (q - problem.shifted_cost[k]));
    }
  }
  return alpha;
}

double evaluate_F(const GameModel& model, const DirichletProblem& problem,
                  StateIndex i, std::span<const double> y, double x) {
  FParts f = f_parts(model, problem, i, y);
  return solve_matrix_game_fast(f.base + x * f.slope).value;
}

double solve_F(const GameModel& model, const DirichletProblem& problem,
               StateIndex i, std::span<const double> y, double target,
               double tol, double guess) {
  if (!problem.domain.contains(i)) {
    throw DirichletError(at_state("solve_F outside the domain", i));
  }
  FParts f = f_parts(model, problem, i, y);
  if (f.slope.maxCoeff() > -problem.margin) {
    throw DirichletError(at_state("bracket failure: slope above -margin", i));
  }
  double y_norm = 0.0;
  for (StateIndex j : problem.domain.states()) {
    if (j != i) y_norm = std::max(y_norm, std::fabs(y[j]));
  }
  const double bound =
      (std::fabs(target) + y_norm * f.row_mass) / problem.margin;
  double lo = -bound * (1.0 + 1e-12) - 1e-300;
  double hi = bound * (1.0 + 1e-12) + 1e-300;
  const double scale =
      std::fabs(target) + y_norm * f.row_mass +
      bound * (-f.slope.minCoeff());
  const double stop = tol > 0.0 ? tol : 16.0 * kEps * scale;

  double x = std::clamp(guess, lo, hi);
  double last_width = hi - lo;
  int stalls = 0;
  for (int iter = 0; iter < 400; ++iter) {
    const MatrixGameSolution sol =
        solve_matrix_game_fast(f.base + x * f.slope);
    const double fx = sol.value - target;
    if (std::fabs(fx) <= stop) return x;
    if (fx > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * kEps * std::max(std::fabs(lo), std::fabs(hi))) {
      return 0.5 * (lo + hi);
    }
    double s = 0.0;
    for (std::size_t a = 0; a < sol.row_strategy.size(); ++a) {
      if (sol.row_strategy[a] == 0.0) continue;
      for (std::size_t b = 0; b < sol.col_strategy.size(); ++b) {
        s += sol.row_strategy[a] * sol.col_strategy[b] * f.slope(a, b);
      }
    }
    double next = x - fx / s;
    const double width = hi - lo;
    stalls = width > 0.5 * last_width ? stalls + 1 : 0;
    last_width = width;
    if (!(next > lo && next < hi) || stalls >= 3) {
      next = 0.5 * (lo + hi);
      stalls = 0;
    }
    x = next;
  }
  throw DirichletError(at_state("solve_F did not converge", i));
}

std::vector<double> apply_T_hat(const GameModel& model,
                                const DirichletProblem& problem,
                                std::span<const double> phi, double tol,
                                unsigned threads) {
  const auto& states = problem.domain.states();
  std::vector<double> in = masked(phi, problem.domain);
  std::vector<double> out(model.num_states(), 0.0);
  parallel_for(states.size(), threads, [&](std::size_t k) {
    const StateIndex i = states[k];
    out[i] = solve_F(model, problem, i, in, -problem.source[i], tol, in[i]);
  });
  return out;
}

double equation_residual(const GameModel& model,
                         const DirichletProblem& problem,
                         std::span<const double> phi) {
  std::vector<double> in = masked(phi, problem.domain);
  double r = 0.0;
  for (StateIndex i : problem.domain.states()) {
    const Eigen::MatrixXd m = hji_matrix(model, i, in, problem.shifted_cost);
    r = std::max(r, std::fabs(solve_matrix_game_fast(m).value +
                              problem.source[i]));
  }
  return r;
}

namespace {

// Strategy iteration: player 1 greedy against the current iterate, player 2
// best response by exact policy iteration on the induced linear problem.
std::vector<double> policy_solve(const GameModel& model,
                                 const DirichletProblem& problem,
                                 std::vector<double> phi, double tol,
                                 std::size_t max_outer,
                                 std::size_t& iterations) {
  const Domain& d = problem.domain;
  const auto& states = d.states();
  const std::size_t n = states.size();
  const double target = 0.5 * tol * problem.margin;
  std::vector<MixedAction> mu(n);
  double prev_res = INFINITY;

  for (std::size_t outer = 0; outer < max_outer; ++outer) {
    iterations = outer + 1;
    double res = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const StateIndex i = states[k];
      const Eigen::MatrixXd m = hji_matrix(model, i, phi, problem.shifted_cost);
      const MatrixGameSolution sol = solve_matrix_game_fast(m);
      res = std::max(res, std::fabs(sol.value + problem.source[i]));
      scale = std::max(scale, m.cwiseAbs().maxCoeff());
      mu[k] = sol.row_strategy;
    }
    if (res <= target) return phi;
    // Rounding floor: no further progress is possible.
    if (outer >= 2 && res >= 0.5 * prev_res && res <= 1e3 * kEps * scale) {
      return phi;
    }
    prev_res = res;

    // Player-2 rows under mu: per state and b, mixed coefficients.
    struct Row {
      std::vector<std::pair<std::size_t, double>> off;  // local j, coefficient
      double diag = 0.0;
    };
    std::vector<std::vector<Row>> rows(n);
    for (std::size_t k = 0; k < n; ++k) {
      const StateIndex i = states[k];
      const std::size_t na = model.num_actions_a(i);
      const std::size_t nb = model.num_actions_b(i);
      rows[k].resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        std::vector<double> dense_coef;
        std::vector<std::size_t> touched;
        Row& r = rows[k][b];
        for (std::size_t a = 0; a < na; ++a) {
          const double w = mu[k][a];
          if (w == 0.0) continue;
          const std::size_t idx = model.pair_index(i, a, b);
          const ActionPairData& p = model.pair_at(idx);
          r.diag += w * (p.diagonal + problem.shifted_cost[idx]);
          for (const auto& e : p.jumps) {
            if (!d.contains(e.j)) continue;
            const std::size_t lj = d.local(e.j);
            auto it = std::find_if(r.off.begin(), r.off.end(),
                                   [&](const auto& x) { return x.first == lj; });
            if (it == r.off.end()) {
              r.off.emplace_back(lj, w * e.q);
            } else {
              it->second += w * e.q;
            }
          }
        }
      }
    }
    auto row_value = [&](std::size_t k, std::size_t b,
                         const std::vector<double>& x) {
      const Row& r = rows[k][b];
      double s = r.diag * x[k];
      for (const auto& [lj, c] : r.off) s += c * x[lj];
      return s;
    };
    std::vector<double> local(n);
    for (std::size_t k = 0; k < n; ++k) local[k] = phi[states[k]];
    std::vector<std::size_t> beta(n, 0);
    auto improve = [&](const std::vector<double>& x, bool initial) {
      bool changed = false;
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = beta[k];
        double best_val = initial ? INFINITY : row_value(k, beta[k], x);
        double mag = 0.0;
        for (std::size_t b = 0; b < rows[k].size(); ++b) {
          const double v = row_value(k, b, x);
          mag = std::max(mag, std::fabs(v));
          if (initial ? v < best_val : v < best_val - 1e-13 * (1.0 + mag)) {
            best_val = v;
            best = b;
          }
        }
        if (best != beta[k]) changed = true;
        beta[k] = best;
      }
      return changed;
    };
    improve(local, true);
    for (int pi_iter = 0; pi_iter < 200; ++pi_iter) {
      std::vector<Eigen::Triplet<double>> trip;
      Eigen::VectorXd rhs(n);
      for (std::size_t k = 0; k < n; ++k) {
        const Row& r = rows[k][beta[k]];
        trip.emplace_back(k, k, r.diag);
        for (const auto& [lj, c] : r.off) trip.emplace_back(k, lj, c);
        rhs(k) = -problem.source[states[k]];
      }
      Eigen::SparseMatrix<double> a(n, n);
      a.setFromTriplets(trip.begin(), trip.end());
      a.makeCompressed();
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(a);
      if (lu.info() != Eigen::Success) {
        throw DirichletError("linear solve failed in strategy iteration");
      }
      Eigen::VectorXd x = lu.solve(rhs);
      for (std::size_t k = 0; k < n; ++k) local[k] = x(k);
      if (!improve(local, false)) break;
    }
    std::fill(phi.begin(), phi.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) phi[states[k]] = local[k];
  }
  throw DirichletError("strategy iteration did not converge");
}

}  // namespace

DirichletResult dirichlet_solve(const GameModel& model,
                                const DirichletProblem& problem,
                                const DirichletOptions& options) {
  check_problem(model, problem);
  const Domain& d = problem.domain;
  DirichletResult result;
  result.stats.method = options.method;
  result.stats.ratio_bound = contraction_bound(model, problem);
  const double alpha = result.stats.ratio_bound;

  std::vector<double> phi(model.num_states(), 0.0);
  if (!options.initial.empty()) {
    if (options.initial.size() != model.num_states()) {
      throw DirichletError("initial iterate has wrong length");
    }
    phi = masked(options.initial, d);
  }

  if (options.method == DirichletMethod::policy) {
    phi = policy_solve(model, problem, std::move(phi), options.tol,
                       std::max<std::size_t>(options.max_iterations, 1),
                       result.stats.iterations);
  } else {
    const double stop =
        alpha > 0.0 ? options.tol * (1.0 - alpha) / alpha : INFINITY;
    double prev_diff = -1.0;
    bool done = false;
    for (std::size_t k = 0; k < options.max_iterations; ++k) {
      std::vector<double> next;
      if (options.method == DirichletMethod::jacobi) {
        next = apply_T_hat(model, problem, phi, 0.0, options.threads);
      } else {
        next = phi;
        for (StateIndex i : d.states()) {
          next[i] = solve_F(model, problem, i, next, -problem.source[i], 0.0,
                            next[i]);
        }
      }
      const double diff = sup_diff(next, phi, d);
      const double floor = 1e-8 * (1.0 + sup_norm(phi, d));
      if (prev_diff > floor) {
        result.stats.measured_ratio =
            std::max(result.stats.measured_ratio, diff / prev_diff);
      }
      prev_diff = diff;
      phi = std::move(next);
      result.stats.iterations = k + 1;
      if (diff <= stop) {
        done = true;
        break;
      }
    }
    if (!done) {
      std::vector<double> t = apply_T_hat(model, problem, phi);
      std::ostringstream os;
      os << "iteration cap reached; residual " << sup_diff(t, phi, d);
      throw DirichletError(os.str());
    }
  }
  if (options.certify) {
    std::vector<double> t = apply_T_hat(model, problem, phi, 0.0,
                                        options.threads);
    result.stats.residual = sup_diff(t, phi, d);
    result.stats.equation_residual = equation_residual(model, problem, phi);
  }
  result.phi = std::move(phi);
  return result;
}

}  // namespace ergogame

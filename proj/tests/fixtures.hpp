// Shared builders and independent oracles for the test binaries.
#ifndef ERGOGAME_TESTS_FIXTURES_HPP_
#define ERGOGAME_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergogame/dirichlet.hpp"
#include "ergogame/domain.hpp"
#include "ergogame/model.hpp"
#include "ergogame/strategy.hpp"

namespace fixtures {

using namespace ergogame;

// Random game on n states with up to `max_actions` actions per player and
// rates in [0, rate_max) to a random subset of the other states.
inline GameModel random_game(std::mt19937_64& rng, std::size_t n,
                             std::size_t max_actions, double rate_max = 2.0,
                             double cost_max = 1.0) {
  std::uniform_int_distribution<std::size_t> act(1, max_actions);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GameModelBuilder b(n);
  for (StateIndex i = 0; i < n; ++i) {
    const std::size_t na = act(rng), nb = act(rng);
    std::vector<std::string> la, lb;
    for (std::size_t k = 0; k < na; ++k) la.push_back("a" + std::to_string(k));
    for (std::size_t k = 0; k < nb; ++k) lb.push_back("b" + std::to_string(k));
    b.actions(i, la, lb);
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t bb = 0; bb < nb; ++bb) {
        std::vector<RateEntry> row;
        for (StateIndex j = 0; j < n; ++j) {
          if (j != i && u(rng) < 0.6) row.push_back({j, rate_max * u(rng)});
        }
        b.rates(i, a, bb, row);
        b.cost(i, a, bb, cost_max * u(rng));
      }
    }
  }
  return b.build();
}

// Dirichlet problem on the first `domain_size` states with shifted cost in
// [-margin - spread, -margin] and source in [0, 1).
inline DirichletProblem random_problem(std::mt19937_64& rng,
                                       const GameModel& m,
                                       std::size_t domain_size, double margin,
                                       double spread = 2.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<StateIndex> states;
  for (StateIndex i = 0; i < domain_size; ++i) states.push_back(i);
  DirichletProblem p;
  p.domain = Domain(m.num_states(), states);
  p.margin = margin;
  p.shifted_cost.resize(m.num_pairs());
  for (double& c : p.shifted_cost) c = -margin - spread * u(rng);
  p.source.assign(m.num_states(), 0.0);
  for (StateIndex i : states) p.source[i] = u(rng);
  return p;
}

// Largest real eigenvalue of a dense matrix whose spectrum has a real
// dominant (Perron) eigenvalue.
inline double perron_root(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  double best = -INFINITY;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const auto ev = es.eigenvalues()(k);
    if (std::fabs(ev.imag()) < 1e-9 * (1.0 + std::fabs(ev.real()))) {
      best = std::max(best, ev.real());
    }
  }
  return best;
}

// Q^pi + diag(c^pi) restricted to a domain, assembled independently of the
// library's policy evaluation.
inline Eigen::MatrixXd twisted_generator(const GameModel& m,
                                         const StationaryStrategy& p1,
                                         const StationaryStrategy& p2,
                                         const Domain& d) {
  const std::size_t n = d.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const StateIndex i = d.states()[k];
    for (std::size_t a = 0; a < m.num_actions_a(i); ++a) {
      for (std::size_t b = 0; b < m.num_actions_b(i); ++b) {
        const double w = p1.dist[i][a] * p2.dist[i][b];
        const ActionPairData& p = m.pair(i, a, b);
        out(k, k) += w * (p.diagonal + p.cost);
        for (const auto& e : p.jumps) {
          if (d.contains(e.j)) out(k, d.local(e.j)) += w * e.q;
        }
      }
    }
  }
  return out;
}

inline StationaryStrategy uniform_strategy(const GameModel& m, bool player1) {
  StationaryStrategy s;
  for (StateIndex i = 0; i < m.num_states(); ++i) {
    const std::size_t n = player1 ? m.num_actions_a(i) : m.num_actions_b(i);
    s.dist.emplace_back(n, 1.0 / static_cast<double>(n));
  }
  return s;
}

// Birth-death chain with one action per player: birth rate `up`, death rate
// `down`, cost slope * i, capped at n states with reflection at the top.
inline GameModel mm1(std::size_t n, double up, double down, double slope) {
  GameModelBuilder b(n);
  for (StateIndex i = 0; i < n; ++i) {
    std::vector<RateEntry> row;
    if (i > 0) row.push_back({i - 1, down});
    if (i + 1 < n) row.push_back({i + 1, up});
    b.rates(i, 0, 0, row);
    b.cost(i, 0, 0, slope * static_cast<double>(i));
  }
  return b.build();
}

}  // namespace fixtures

#endif  // ERGOGAME_TESTS_FIXTURES_HPP_

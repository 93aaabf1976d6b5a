#ifndef ERGOGAME_STRATEGY_HPP_
#define ERGOGAME_STRATEGY_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ergogame/model.hpp"

namespace ergogame {

using MixedAction = std::vector<double>;

// Per-state distributions over the player's action set. An empty entry means
// the strategy is undefined at that state.
struct StationaryStrategy {
  std::vector<MixedAction> dist;

  bool defined_at(StateIndex i) const {
    return i < dist.size() && !dist[i].empty();
  }
};

// Throws std::invalid_argument naming the first bad state.
void validate_strategy(const GameModel& model, const StationaryStrategy& s,
                       bool player_one, const std::vector<StateIndex>& states);

// Mixture of the rows of state i under (mu, nu).
struct MixedRow {
  std::vector<RateEntry> jumps;  // off-diagonal, ascending j
  double diagonal = 0.0;
  double escape = 0.0;
  double cost = 0.0;
};

MixedRow mix_row(const GameModel& model, StateIndex i, const MixedAction& mu,
                 const MixedAction& nu);

// Matrix with entries sum_j psi(j) q(j|i,a,b) + weight(i,a,b) psi(i), where
// `weight` is indexed by flat pair index. Escaping mass contributes nothing.
Eigen::MatrixXd hji_matrix(const GameModel& model, StateIndex i,
                           std::span<const double> psi,
                           std::span<const double> weight);

// Flat per-pair cost vector of the model.
std::vector<double> model_costs(const GameModel& model);

}  // namespace ergogame

#endif  // ERGOGAME_STRATEGY_HPP_

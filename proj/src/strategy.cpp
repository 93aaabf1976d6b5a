#include "ergogame/strategy.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace ergogame {

void validate_strategy(const GameModel& model, const StationaryStrategy& s,
                       bool player_one, const std::vector<StateIndex>& states) {
  const char* who = player_one ? "player 1" : "player 2";
  for (StateIndex i : states) {
    if (!s.defined_at(i)) {
      throw std::invalid_argument(std::string(who) +
                                  " strategy undefined at state " +
                                  std::to_string(i));
    }
    const std::size_t n =
        player_one ? model.num_actions_a(i) : model.num_actions_b(i);
    const auto& d = s.dist[i];
    if (d.size() != n) {
      throw std::invalid_argument(std::string(who) +
                                  " strategy has wrong size at state " +
                                  std::to_string(i));
    }
    double sum = 0.0;
    for (double p : d) {
      if (!(p >= 0.0)) {
        throw std::invalid_argument(std::string(who) +
                                    " strategy has a negative entry at state " +
                                    std::to_string(i));
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument(std::string(who) +
                                  " strategy does not sum to one at state " +
                                  std::to_string(i));
    }
  }
}

MixedRow mix_row(const GameModel& model, StateIndex i, const MixedAction& mu,
                 const MixedAction& nu) {
  MixedRow row;
  std::map<StateIndex, double> acc;
  const std::size_t nb = model.num_actions_b(i);
  for (std::size_t a = 0; a < model.num_actions_a(i); ++a) {
    if (mu[a] == 0.0) continue;
    for (std::size_t b = 0; b < nb; ++b) {
      const double w = mu[a] * nu[b];
      if (w == 0.0) continue;
      const ActionPairData& p = model.pair(i, a, b);
      for (const auto& e : p.jumps) acc[e.j] += w * e.q;
      row.diagonal += w * p.diagonal;
      row.escape += w * p.escape;
      row.cost += w * p.cost;
    }
  }
  for (const auto& [j, q] : acc) row.jumps.push_back({j, q});
  return row;
}

Eigen::MatrixXd hji_matrix(const GameModel& model, StateIndex i,
                           std::span<const double> psi,
                           std::span<const double> weight) {
  const std::size_t na = model.num_actions_a(i);
  const std::size_t nb = model.num_actions_b(i);
  const std::size_t offset = model.pair_offset(i);
  Eigen::MatrixXd m(na, nb);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t k = offset + a * nb + b;
      const ActionPairData& p = model.pair_at(k);
      double s = (p.diagonal + weight[k]) * psi[i];
      for (const auto& e : p.jumps) s += psi[e.j] * e.q;
      m(a, b) = s;
    }
  }
  return m;
}

std::vector<double> model_costs(const GameModel& model) {
  std::vector<double> c(model.num_pairs());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = model.pair_at(k).cost;
  return c;
}

}  // namespace ergogame

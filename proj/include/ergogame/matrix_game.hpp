#ifndef ERGOGAME_MATRIX_GAME_HPP_
#define ERGOGAME_MATRIX_GAME_HPP_

#include <vector>

#include <Eigen/Dense>

namespace ergogame {

// Zero-sum game: the row player maximizes, the column player minimizes.
struct MatrixGameSolution {
  double value = 0.0;
  std::vector<double> row_strategy;
  std::vector<double> col_strategy;
  double duality_gap = 0.0;
};

// Value and optimal strategies; among optimal strategies the
// lexicographically smallest vector is returned for each player.
MatrixGameSolution solve_matrix_game(const Eigen::MatrixXd& m,
                                     double tol = 1e-10);

// Same value, one optimal pair, no tie-break refinement. Used in inner loops.
MatrixGameSolution solve_matrix_game_fast(const Eigen::MatrixXd& m);

// max_i (M y)_i - min_j (x'M)_j
double duality_gap(const Eigen::MatrixXd& m, const std::vector<double>& x,
                   const std::vector<double>& y);

// Independent reference: enumerates every vertex of the row player's LP.
// Limited to 12 x 12.
double game_value_oracle(const Eigen::MatrixXd& m);

}  // namespace ergogame

#endif  // ERGOGAME_MATRIX_GAME_HPP_

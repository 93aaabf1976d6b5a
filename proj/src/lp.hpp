#ifndef ERGOGAME_SRC_LP_HPP_
#define ERGOGAME_SRC_LP_HPP_

#include <vector>

namespace ergogame::lp {

enum class Status { optimal, infeasible, unbounded };

// minimize c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
// Dense two-phase tableau simplex with Bland's rule.
struct Problem {
  std::vector<double> c;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
};

struct Result {
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
};

Result solve(const Problem& problem, double eps = 1e-12);

// max 1'w s.t. M w <= 1, w >= 0 for an entrywise positive m x n matrix
// (row-major). Returns w and the dual u (M'u >= 1, u >= 0) read off the final
// tableau.
struct PackingResult {
  std::vector<double> w;
  std::vector<double> u;
  double objective = 0.0;
};

PackingResult solve_packing(const std::vector<double>& m, int rows, int cols);

}  // namespace ergogame::lp

#endif  // ERGOGAME_SRC_LP_HPP_

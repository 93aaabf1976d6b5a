#include "ergogame/matrix_game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lp.hpp"

namespace ergogame {
namespace {

void check_finite(const Eigen::MatrixXd& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("matrix game needs at least one row and column");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument("matrix game has a non-finite entry");
  }
}

void normalize(std::vector<double>& p) {
  double sum = 0.0;
  for (double& v : p) {
    v = std::max(v, 0.0);
    sum += v;
  }
  if (!(sum > 0.0)) throw std::runtime_error("degenerate strategy");
  for (double& v : p) v /= sum;
}

double row_guarantee(const Eigen::MatrixXd& m, const std::vector<double>& x) {
  double worst = INFINITY;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += x[i] * m(i, j);
    worst = std::min(worst, s);
  }
  return worst;
}

double col_guarantee(const Eigen::MatrixXd& m, const std::vector<double>& y) {
  double worst = -INFINITY;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += m(i, j) * y[j];
    worst = std::max(worst, s);
  }
  return worst;
}

// Lexicographically smallest x in {x >= 0, 1'x = 1, sign * (A x) >= bound}
// where A is m' (rows) or m (columns). Returns false if an LP fails.
bool lex_min(const Eigen::MatrixXd& a, double bound, std::vector<double>& out) {
  const int k = static_cast<int>(a.cols());
  const int cons = static_cast<int>(a.rows());
  lp::Problem p;
  p.c.assign(k, 0.0);
  for (int r = 0; r < cons; ++r) {
    std::vector<double> row(k);
    for (int c = 0; c < k; ++c) row[c] = -a(r, c);
    p.a_ub.push_back(std::move(row));
    p.b_ub.push_back(-bound);
  }
  p.a_eq.push_back(std::vector<double>(k, 1.0));
  p.b_eq.push_back(1.0);
  std::vector<double> fixed(k, 0.0);
  for (int idx = 0; idx + 1 < k; ++idx) {
    std::fill(p.c.begin(), p.c.end(), 0.0);
    p.c[idx] = 1.0;
    lp::Result r = lp::solve(p);
    if (r.status != lp::Status::optimal) return false;
    fixed[idx] = std::max(0.0, r.x[idx]);
    std::vector<double> cap(k, 0.0);
    cap[idx] = 1.0;
    p.a_ub.push_back(std::move(cap));
    p.b_ub.push_back(fixed[idx] + 1e-13);
    if (idx + 2 == k) {
      out = r.x;
      return true;
    }
  }
  out.assign(k, 0.0);
  out[0] = 1.0;
  return true;
}

// Zeroes probabilities below `floor` when the result stays within `slack` of
// the target guarantee.
template <typename Guarantee>
void snap(std::vector<double>& p, double floor, Guarantee ok) {
  std::vector<double> q = p;
  bool changed = false;
  for (double& v : q) {
    if (v > 0.0 && v < floor) {
      v = 0.0;
      changed = true;
    }
  }
  if (!changed) return;
  normalize(q);
  if (ok(q)) p = std::move(q);
}

// Re-solves the equalizing system on the support of an approximate optimal
// strategy x of the maximizer of min_j (A'x)_j, removing the drift the LP
// slack allows. Keeps x unless the polished point is at least as good.
void polish(const Eigen::MatrixXd& a, std::vector<double>& x) {
  const int k = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  std::vector<int> support;
  for (int i = 0; i < k; ++i) {
    if (x[i] > 1e-9) support.push_back(i);
  }
  Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), k);
  Eigen::VectorXd pay = a.transpose() * xv;
  const double low = pay.minCoeff();
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  std::vector<int> tight;
  for (int j = 0; j < n; ++j) {
    if (pay(j) - low <= 1e-9 * scale) tight.push_back(j);
  }
  const int s = static_cast<int>(support.size());
  const int t = static_cast<int>(tight.size());
  // Unknowns: x on the support and the common payoff w.
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(t + 1, s + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(t + 1);
  for (int r = 0; r < t; ++r) {
    for (int c = 0; c < s; ++c) sys(r, c) = a(support[c], tight[r]);
    sys(r, s) = -1.0;
  }
  for (int c = 0; c < s; ++c) sys(t, c) = 1.0;
  rhs(t) = 1.0;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys);
  if (cod.rank() < s + 1) return;
  Eigen::VectorXd z = cod.solve(rhs);
  if ((sys * z - rhs).cwiseAbs().maxCoeff() > 1e-12 * scale) return;
  std::vector<double> out(k, 0.0);
  for (int c = 0; c < s; ++c) {
    if (z(c) < 0.0 || std::fabs(z(c) - x[support[c]]) > 1e-7) return;
    out[support[c]] = z(c);
  }
  normalize(out);
  Eigen::VectorXd ov = Eigen::Map<const Eigen::VectorXd>(out.data(), k);
  if ((a.transpose() * ov).minCoeff() < low - 1e-13 * scale) return;
  x = std::move(out);
}

}  // namespace

double duality_gap(const Eigen::MatrixXd& m, const std::vector<double>& x,
                   const std::vector<double>& y) {
  return col_guarantee(m, y) - row_guarantee(m, x);
}

MatrixGameSolution solve_matrix_game_fast(const Eigen::MatrixXd& m) {
  check_finite(m);
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  MatrixGameSolution s;

  // Pure saddle point.
  int best_row = 0;
  double maximin = -INFINITY;
  for (int i = 0; i < rows; ++i) {
    const double r = m.row(i).minCoeff();
    if (r > maximin) {
      maximin = r;
      best_row = i;
    }
  }
  int best_col = 0;
  double minimax = INFINITY;
  for (int j = 0; j < cols; ++j) {
    const double c = m.col(j).maxCoeff();
    if (c < minimax) {
      minimax = c;
      best_col = j;
    }
  }
  if (maximin == minimax) {
    s.value = maximin;
    s.row_strategy.assign(rows, 0.0);
    s.col_strategy.assign(cols, 0.0);
    s.row_strategy[best_row] = 1.0;
    s.col_strategy[best_col] = 1.0;
    s.duality_gap = 0.0;
    return s;
  }

  const double shift = 1.0 - m.minCoeff();
  std::vector<double> shifted(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) shifted[i * cols + j] = m(i, j) + shift;
  }
  lp::PackingResult r = lp::solve_packing(shifted, rows, cols);
  s.row_strategy = r.u;
  s.col_strategy = r.w;
  normalize(s.row_strategy);
  normalize(s.col_strategy);
  const double lo = row_guarantee(m, s.row_strategy);
  const double hi = col_guarantee(m, s.col_strategy);
  s.value = std::clamp(0.5 * (lo + hi), m.minCoeff(), m.maxCoeff());
  s.duality_gap = hi - lo;
  return s;
}

MatrixGameSolution solve_matrix_game(const Eigen::MatrixXd& m, double tol) {
  MatrixGameSolution s = solve_matrix_game_fast(m);
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  const double slack = 1e-11 * scale;
  const double v = s.value;

  if (m.rows() > 1) {
    std::vector<double> x;
    if (lex_min(m.transpose(), v - slack - 0.5 * s.duality_gap, x)) {
      normalize(x);
      polish(m, x);
      snap(x, 1e-9, [&](const std::vector<double>& q) {
        return row_guarantee(m, q) >= v - 0.25 * tol;
      });
      if (row_guarantee(m, x) >= v - 0.5 * tol) s.row_strategy = x;
    }
  }
  if (m.cols() > 1) {
    std::vector<double> y;
    if (lex_min(-m, -(v + slack + 0.5 * s.duality_gap), y)) {
      normalize(y);
      polish(-m.transpose(), y);
      snap(y, 1e-9, [&](const std::vector<double>& q) {
        return col_guarantee(m, q) <= v + 0.25 * tol;
      });
      if (col_guarantee(m, y) <= v + 0.5 * tol) s.col_strategy = y;
    }
  }
  s.duality_gap = duality_gap(m, s.row_strategy, s.col_strategy);
  return s;
}

double game_value_oracle(const Eigen::MatrixXd& m) {
  check_finite(m);
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  if (rows > 12 || cols > 12) {
    throw std::invalid_argument("oracle limited to 12 x 12 games");
  }
  // Unknowns (x_0..x_{rows-1}, v). Inequalities: (M'x)_j - v >= 0 for each
  // column, x_i >= 0 for each row. One equality: sum x = 1. A vertex makes
  // `rows` inequalities tight.
  const int n_ineq = cols + rows;
  const int dim = rows + 1;
  auto ineq_row = [&](int k) {
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(dim);
    if (k < cols) {
      for (int i = 0; i < rows; ++i) g(i) = m(i, k);
      g(rows) = -1.0;
    } else {
      g(k - cols) = 1.0;
    }
    return g;
  };
  const double feas_tol = 1e-9 * (1.0 + m.cwiseAbs().maxCoeff());
  double best = -INFINITY;
  std::vector<int> pick(rows);
  for (int i = 0; i < rows; ++i) pick[i] = i;
  while (true) {
    Eigen::MatrixXd a(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (int r = 0; r < rows; ++r) a.row(r) = ineq_row(pick[r]);
    a.row(rows).setZero();
    a.row(rows).head(rows).setOnes();
    rhs(rows) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.isInvertible()) {
      Eigen::VectorXd z = lu.solve(rhs);
      bool feasible = true;
      for (int k = 0; k < n_ineq && feasible; ++k) {
        feasible = ineq_row(k).dot(z) >= -feas_tol;
      }
      if (feasible) best = std::max(best, z(rows));
    }
    // next combination
    int k = rows - 1;
    while (k >= 0 && pick[k] == n_ineq - rows + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int r = k + 1; r < rows; ++r) pick[r] = pick[r - 1] + 1;
  }
  if (!std::isfinite(best)) throw std::runtime_error("oracle found no vertex");
  return best;
}

}  // namespace ergogame

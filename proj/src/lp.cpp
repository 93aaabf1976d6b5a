#include "lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace ergogame::lp {
namespace {

// Tableau with `rows` constraint rows plus one objective row at the end.
// Column `cols` holds the right-hand side.
class Tableau {
 public:
  Tableau(int rows, int cols)
      : rows_(rows), cols_(cols), t_((rows + 1) * (cols + 1), 0.0),
        basis_(rows, -1) {}

  double& at(int r, int c) { return t_[r * (cols_ + 1) + c]; }
  double at(int r, int c) const { return t_[r * (cols_ + 1) + c]; }
  double& rhs(int r) { return at(r, cols_); }
  double& obj(int c) { return at(rows_, c); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::vector<int>& basis() { return basis_; }

  void pivot(int pr, int pc) {
    const double p = at(pr, pc);
    for (int c = 0; c <= cols_; ++c) at(pr, c) /= p;
    at(pr, pc) = 1.0;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis_[pr] = pc;
  }

  // Minimizes the objective row (reduced costs in row `rows_`, negative
  // objective value in the rhs slot). Columns >= `allowed` never enter.
  Status run(int allowed, double eps) {
    const int max_iter = 50 * (rows_ + cols_) + 1000;
    for (int iter = 0; iter < max_iter; ++iter) {
      int enter = -1;
      for (int c = 0; c < allowed; ++c) {
        if (obj(c) < -eps) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return Status::optimal;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= eps) continue;
        const double ratio = rhs(r) / a;
        if (leave < 0 || ratio < best - eps ||
            (std::fabs(ratio - best) <= eps && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave < 0) return Status::unbounded;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex iteration limit reached");
  }

 private:
  int rows_;
  int cols_;
  std::vector<double> t_;
  std::vector<int> basis_;
};

}  // namespace

Result solve(const Problem& p, double eps) {
  const int n = static_cast<int>(p.c.size());
  const int m_ub = static_cast<int>(p.a_ub.size());
  const int m_eq = static_cast<int>(p.a_eq.size());
  const int m = m_ub + m_eq;
  // Columns: x (n), slacks (m_ub), artificials (m).
  const int n_slack = m_ub;
  const int art0 = n + n_slack;
  const int total = art0 + m;
  Tableau t(m, total);

  for (int r = 0; r < m; ++r) {
    const bool ub = r < m_ub;
    const auto& row = ub ? p.a_ub[r] : p.a_eq[r - m_ub];
    double b = ub ? p.b_ub[r] : p.b_eq[r - m_ub];
    const double sign = b < 0.0 ? -1.0 : 1.0;
    for (int c = 0; c < n; ++c) t.at(r, c) = sign * row[c];
    if (ub) t.at(r, n + r) = sign;
    t.at(r, art0 + r) = 1.0;
    t.rhs(r) = sign * b;
    t.basis()[r] = art0 + r;
  }
  // Phase 1: minimize the sum of artificials.
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c <= total; ++c) {
      if (c >= art0 && c < total) continue;
      t.obj(c) -= t.at(r, c);
    }
  }
  t.run(art0, eps);
  Result result;
  if (-t.obj(total) > 1e-9) {
    result.status = Status::infeasible;
    return result;
  }
  // Drive artificials out of the basis where possible.
  for (int r = 0; r < m; ++r) {
    if (t.basis()[r] < art0) continue;
    for (int c = 0; c < art0; ++c) {
      if (std::fabs(t.at(r, c)) > 1e-9) {
        t.pivot(r, c);
        break;
      }
    }
  }
  // Phase 2 objective in terms of the current basis.
  for (int c = 0; c <= total; ++c) t.obj(c) = 0.0;
  for (int c = 0; c < n; ++c) t.obj(c) = p.c[c];
  for (int r = 0; r < m; ++r) {
    const int bcol = t.basis()[r];
    if (bcol >= n) continue;
    const double f = t.obj(bcol);
    if (f == 0.0) continue;
    for (int c = 0; c <= total; ++c) t.obj(c) -= f * t.at(r, c);
  }
  // Artificials stuck in the basis sit on redundant rows at level zero; they
  // may not re-enter.
  result.status = t.run(art0, eps);
  if (result.status != Status::optimal) return result;
  result.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r) {
    const int bcol = t.basis()[r];
    if (bcol < n) result.x[bcol] = t.rhs(r);
  }
  result.objective = -t.obj(total);
  return result;
}

PackingResult solve_packing(const std::vector<double>& mat, int rows,
                            int cols) {
  Tableau t(rows, cols + rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) t.at(r, c) = mat[r * cols + c];
    t.at(r, cols + r) = 1.0;
    t.rhs(r) = 1.0;
    t.basis()[r] = cols + r;
  }
  for (int c = 0; c < cols; ++c) t.obj(c) = -1.0;
  const Status s = t.run(cols + rows, 1e-13);
  if (s != Status::optimal) throw std::runtime_error("packing LP failed");
  PackingResult out;
  out.w.assign(cols, 0.0);
  out.u.assign(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    const int b = t.basis()[r];
    if (b < cols) out.w[b] = t.rhs(r);
  }
  for (int r = 0; r < rows; ++r) out.u[r] = t.obj(cols + r);
  out.objective = -t.obj(cols + rows);
  return out;
}

}  // namespace ergogame::lp

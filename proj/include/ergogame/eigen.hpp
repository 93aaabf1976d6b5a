#ifndef ERGOGAME_EIGEN_HPP_
#define ERGOGAME_EIGEN_HPP_

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergogame/dirichlet.hpp"
#include "ergogame/domain.hpp"
#include "ergogame/model.hpp"
#include "ergogame/strategy.hpp"

namespace ergogame {

class EigenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr StateIndex kNoState = std::numeric_limits<StateIndex>::max();

struct LadderLevel {
  std::size_t n = 0;  // 1-based level
  std::size_t radius = 0;
  std::size_t domain_size = 0;
  double rho = 0.0;
  double residual = 0.0;
  double theta = 0.0;
  StateIndex touch_state = kNoState;
  std::size_t iterations = 0;
  double rho_change = std::numeric_limits<double>::quiet_NaN();
  double psi_change = std::numeric_limits<double>::quiet_NaN();  // on W, / V
};

struct EigenSolution {
  Domain domain;
  bool whole_space = false;  // ladder limit rather than a single truncation
  double rho = 0.0;
  std::vector<double> psi;  // full length, zero outside the domain
  std::string normalization = "psi(i0)=1";
  double residual = 0.0;  // sup |HJI - rho psi| / max(1, psi)
  double delta_used = 0.0;
  std::size_t iterations = 0;
  std::vector<LadderLevel> ladder_trace;

  // Set by lyapunov_scale.
  double theta = 0.0;
  StateIndex touch_state = kNoState;
  bool touch_in_drift_set = false;

  // Ladder limits: the core window W and the W states left out of the
  // whole-space residual because their rows leave the final truncation.
  std::vector<StateIndex> window;
  std::vector<StateIndex> residual_excluded;
};

struct EigenOptions {
  double tol = 1e-9;
  std::size_t max_iterations = 20000;
  // Stagnation: no residual improvement by 1% over this many iterations.
  std::size_t stall_window = 200;
  std::vector<double> initial;  // full length; empty means V or ones
  DirichletMethod method = DirichletMethod::policy;
  unsigned threads = 1;
};

// Principal eigenpair of the HJI operator on a finite domain with killing
// outside, by power iteration on the Dirichlet solution map with shifted
// cost c - sup_D c - delta. psi(i0) = 1.
EigenSolution dirichlet_eigenpair(const GameModel& model, const Domain& domain,
                                  double delta, const EigenOptions& options = {});

struct ResidualReport {
  double max = 0.0;      // of per_state / max(1, psi)
  double max_abs = 0.0;  // of per_state
  StateIndex worst_state = kNoState;
  std::vector<double> per_state;  // full length, zero off `states`
};

// |val_i[sum_j psi(j) q(j|i,a,b) + c(i,a,b) psi(i)] - rho psi(i)| over states.
// Solutions report the weighted form, which stays meaningful when psi grows
// by many orders of magnitude across the domain.
ResidualReport hji_residual(const GameModel& model,
                            const std::vector<StateIndex>& states, double rho,
                            const std::vector<double>& psi,
                            unsigned threads = 1);

struct BoundCheck {
  std::size_t level = 0;  // 0 for a single solution
  double rho = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
};

struct BoundsReport {
  double lower_bound = 0.0;  // val[q(i0|i0,a,b)]
  double upper_bound = std::numeric_limits<double>::infinity();  // C + k1
  double k1 = 0.0;
  bool upper_applicable = false;  // unbounded-cost mode only
  std::vector<BoundCheck> checks;  // each ladder level, or the solution
  bool ok = false;
};

BoundsReport eigen_bounds_check(const EigenSolution& solution,
                                const GameModel& model,
                                const LyapunovData* lyap);

// Scales psi by theta = min V/psi over the domain so that psi <= V with
// equality at the touch state.
EigenSolution lyapunov_scale(const EigenSolution& solution,
                             const LyapunovData& lyap);

class LadderNotConverged : public EigenError {
 public:
  LadderNotConverged(const std::string& what, EigenSolution partial)
      : EigenError(what), partial_(std::move(partial)) {}
  const EigenSolution& partial() const { return partial_; }

 private:
  EigenSolution partial_;
};

struct LadderOptions {
  EigenOptions eigen;
  double ladder_tol = 1e-3;
};

// Runs every ladder level, seeding each with the previous scaled psi extended
// by V. Converged when the last two levels agree in rho and in psi/V on the
// core window W = first domain, or when the last domain is the whole of a
// finite model. Output is normalized to psi(i0) = 1.
EigenSolution ladder_limit(const GameModel& model, const LyapunovData& lyap,
                           const TruncationLadder& ladder, double delta,
                           const LadderOptions& options = {});

struct SelectorPair {
  StationaryStrategy pi1;
  StationaryStrategy pi2;
  std::vector<double> values;        // per state; zero off the domain
  std::vector<double> duality_gaps;  // per state
  double max_duality_gap = 0.0;
  Domain domain;
};

// Saddle points of the per-state games sum_j psi(j) q + c psi(i). States off
// the solution domain get uniform distributions. Throws EigenError naming a
// state whose value misses rho psi(i) by more than tol max(1, psi(i)).
SelectorPair extract_selectors(const GameModel& model,
                               const EigenSolution& solution, double tol,
                               unsigned threads = 1);

}  // namespace ergogame

#endif  // ERGOGAME_EIGEN_HPP_

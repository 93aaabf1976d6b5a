#ifndef ERGOGAME_POLICY_EVAL_HPP_
#define ERGOGAME_POLICY_EVAL_HPP_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergogame/domain.hpp"
#include "ergogame/model.hpp"
#include "ergogame/strategy.hpp"

namespace ergogame {

using Components = std::vector<std::vector<StateIndex>>;

class ReducibleSupport : public std::runtime_error {
 public:
  ReducibleSupport(const std::string& what, Components components)
      : std::runtime_error(what), components_(std::move(components)) {}
  const Components& components() const { return components_; }

 private:
  Components components_;
};

// Strongly connected components of a directed graph given by adjacency
// lists, each component sorted, components ordered by smallest member.
std::vector<std::vector<std::size_t>> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& adjacency);

enum class PerronMethod {
  resolvent,      // power iteration on (sigma I - M)^-1, sigma above rho
  shifted_power,  // power iteration on M + s I, s = 1.05 max exit rate
};

struct EvalOptions {
  double tol = 1e-9;  // on ||M psi - rho psi|| / ||psi||
  PerronMethod method = PerronMethod::resolvent;
  std::size_t max_iterations = 2000000;
  bool require_irreducible = true;
  std::vector<double> initial;  // full length, positive on the domain
};

struct PolicyEvaluation {
  Domain domain;
  double rho_pi = 0.0;
  std::vector<double> psi_pi;  // full length; psi(i0) = 1 when i0 is inside
  double residual = 0.0;
  std::size_t iterations = 0;
  bool irreducible = true;
  Components components;
};

// Perron eigenpair of Q^pi + diag(c^pi) restricted to the domain (killing
// outside). Throws ReducibleSupport when the pair's support graph on the
// domain is not strongly connected and options.require_irreducible is set.
PolicyEvaluation evaluate_pair(const GameModel& model,
                               const StationaryStrategy& pi1,
                               const StationaryStrategy& pi2,
                               const Domain& domain,
                               const EvalOptions& options = {});

struct Deviation {
  StateIndex state = 0;
  int player = 1;
  std::size_t action = 0;
  std::string label;
  double rho_deviated = 0.0;
  // Improvement for the deviating player: rho_dev - rho for player 1 (the
  // maximizer), rho - rho_dev for player 2. Positive beyond tol flags it.
  double slack = 0.0;
  bool violation = false;
};

struct DeviationReport {
  double rho = 0.0;
  double tol_dev = 0.0;
  std::vector<Deviation> deviations;
  std::size_t violations = 0;
  double worst_slack_p1 = -INFINITY;
  double worst_slack_p2 = -INFINITY;
  bool ok = true;
};

// Every single-state pure deviation of either player on the domain.
DeviationReport deviation_sweep(const GameModel& model,
                                const StationaryStrategy& pi1,
                                const StationaryStrategy& pi2,
                                const Domain& domain, double tol_dev,
                                unsigned threads = 1,
                                const EvalOptions& options = {});

// state,player,action,rho_deviated,slack
void write_deviations_csv(std::ostream& out, const DeviationReport& report);

struct SpotStart {
  StateIndex state = 0;
  double estimate = 0.0;  // E[exp(int l_hat) V(xi at the hitting time)]
  double se = 0.0;
  double bound = 0.0;  // V(i)
  double unabsorbed_fraction = 0.0;
  bool ok = false;  // estimate <= V(i) (1 + 3 se / estimate)
};

struct SpotReport {
  std::vector<StateIndex> target;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::size_t max_jumps = 0;
  std::vector<SpotStart> starts;
  bool ok = true;
  std::string caveat;
};

// Monte Carlo check of the exit-time functional up to the hitting time of
// `target`. Advisory only: the functional can be heavy-tailed.
SpotReport exit_bound_spotcheck(const GameModel& model,
                                const LyapunovData& lyap,
                                const StationaryStrategy& pi1,
                                const StationaryStrategy& pi2,
                                const std::vector<StateIndex>& target,
                                const std::vector<StateIndex>& starts,
                                std::size_t paths, std::uint64_t seed,
                                std::size_t max_jumps = 1000000,
                                unsigned threads = 1);

}  // namespace ergogame

#endif  // ERGOGAME_POLICY_EVAL_HPP_

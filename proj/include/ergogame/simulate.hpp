#ifndef ERGOGAME_SIMULATE_HPP_
#define ERGOGAME_SIMULATE_HPP_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ergogame/model.hpp"
#include "ergogame/strategy.hpp"

namespace ergogame {

enum class CostMode {
  expected,  // accrue c(i, mu_i, nu_i)
  realized,  // sample (a, b) at each jump epoch and accrue c(i, a, b)
};

const char* to_string(CostMode m);

struct Trajectory {
  std::vector<double> times;       // segment start times, times[0] = 0
  std::vector<StateIndex> states;  // state during each segment
  std::vector<int> action_a;       // realized actions; -1 in expected mode
  std::vector<int> action_b;
  std::vector<double> cost_rates;  // cost per unit time on each segment
  double horizon = 0.0;
  double total_cost = 0.0;  // integral of the cost over [0, horizon]
  std::size_t jumps = 0;
  // Left the stored truncation; absorbed at the boundary with zero cost.
  bool exited = false;
};

// Jump-chain sampler for a stationary pair. Precomputes the mixed rows, so
// build once per (model, strategies) and sample many paths from it.
class Simulator {
 public:
  Simulator(const GameModel& model, const StationaryStrategy& pi1,
            const StationaryStrategy& pi2, CostMode mode = CostMode::expected);

  // Path number `index` of the stream keyed by `seed`. With record = false
  // only the totals are filled in.
  Trajectory sample(StateIndex start, double horizon, std::uint64_t seed,
                    std::uint64_t index, bool record = true) const;

  const GameModel& model() const { return model_; }

 private:
  struct StateTable {
    std::vector<StateIndex> to;
    std::vector<double> cum;  // cumulative jump rates, escape excluded
    double rate = 0.0;        // total exit rate, escape included
    double cost = 0.0;        // mixed cost
    std::vector<double> cum_a, cum_b;  // action cdfs
    bool defined = false;
  };
  const GameModel& model_;
  CostMode mode_;
  std::vector<StateTable> tables_;
};

Trajectory sample_trajectory(const GameModel& model,
                             const StationaryStrategy& pi1,
                             const StationaryStrategy& pi2, StateIndex start,
                             double horizon, std::uint64_t seed,
                             std::uint64_t index = 0,
                             CostMode mode = CostMode::expected);

// t,state,a_label,b_label,cost_rate
void write_trajectory_csv(std::ostream& out, const GameModel& model,
                          const Trajectory& t);

struct EstimateOptions {
  CostMode mode = CostMode::expected;
  unsigned threads = 1;
  std::size_t bootstrap = 200;
  double max_exit_fraction = 0.01;
};

struct RiskSensitiveEstimate {
  double j_hat = 0.0;
  double horizon = 0.0;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  StateIndex start = 0;
  CostMode mode = CostMode::expected;
  double max_exponent = 0.0;  // max over paths of the cost integral
  double log_sum_exp = 0.0;
  double effective_sample_size = 0.0;
  double bootstrap_se = 0.0;
  std::size_t bootstrap = 0;
  double mean_cost_rate = 0.0;  // (1/T) mean integral; Jensen lower bound
  std::size_t exited = 0;
  double exit_fraction = 0.0;
  bool refused = false;  // exit fraction above the allowed maximum
};

// J = (1/T) (log sum_k exp(S_k) - log N) over N paths of length T.
// Deterministic in the seed and independent of the thread count.
RiskSensitiveEstimate estimate_J(const GameModel& model,
                                 const StationaryStrategy& pi1,
                                 const StationaryStrategy& pi2,
                                 StateIndex start, double horizon,
                                 std::size_t paths, std::uint64_t seed,
                                 const EstimateOptions& options = {});

// Aggregation of precomputed cost integrals, exposed for testing.
RiskSensitiveEstimate aggregate_J(const std::vector<double>& integrals,
                                  double horizon, std::uint64_t seed,
                                  std::size_t bootstrap);

struct HorizonProfile {
  std::vector<RiskSensitiveEstimate> estimates;
  // Richardson-style slope K from the last two horizons, J(T) ~ J + K / T,
  // and the extrapolated value J(T2) - K / T2.
  double slope = 0.0;
  double extrapolated = 0.0;
};

HorizonProfile horizon_profile(const GameModel& model,
                               const StationaryStrategy& pi1,
                               const StationaryStrategy& pi2,
                               StateIndex start,
                               const std::vector<double>& horizons,
                               std::size_t paths, std::uint64_t seed,
                               const EstimateOptions& options = {});

}  // namespace ergogame

#endif  // ERGOGAME_SIMULATE_HPP_

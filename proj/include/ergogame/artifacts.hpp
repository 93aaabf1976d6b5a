#ifndef ERGOGAME_ARTIFACTS_HPP_
#define ERGOGAME_ARTIFACTS_HPP_

#include <iosfwd>
#include <string>

#include "ergogame/eigen.hpp"
#include "ergogame/json_io.hpp"
#include "ergogame/model.hpp"
#include "ergogame/policy_eval.hpp"
#include "ergogame/simulate.hpp"

namespace ergogame {

// state -> {action label -> probability}, over the states where defined.
Json strategy_to_json(const GameModel& model, const StationaryStrategy& s,
                      bool player_one);
// Throws FormatError on unknown states or labels, negative probabilities or
// a distribution that does not sum to one within 1e-9.
StationaryStrategy strategy_from_json(const GameModel& model, const Json& j,
                                      bool player_one,
                                      const std::string& where);

// {"pi1": ..., "pi2": ..., "max_duality_gap": ...}
Json selectors_to_json(const GameModel& model, const SelectorPair& s);
struct StrategyPair {
  StationaryStrategy pi1;
  StationaryStrategy pi2;
};
StrategyPair selectors_from_json(const GameModel& model, const Json& j,
                                 const std::string& source);

// rho, psi (state -> value), normalization, residual, ladder trace, delta,
// and the selectors when given.
Json solution_to_json(const GameModel& model, const EigenSolution& s,
                      const SelectorPair* selectors = nullptr);
EigenSolution solution_from_json(const GameModel& model, const Json& j,
                                 const std::string& source);

// n,radius,rho_n,residual,theta_n,touch_state
void write_ladder_csv(std::ostream& out, const EigenSolution& s);

Json deviations_to_json(const DeviationReport& r);
Json spot_report_to_json(const SpotReport& r);
Json bounds_to_json(const BoundsReport& r);
Json estimate_to_json(const RiskSensitiveEstimate& e);
Json validation_to_json(const ValidationReport& r);
Json drift_to_json(const DriftReport& r);

}  // namespace ergogame

#endif  // ERGOGAME_ARTIFACTS_HPP_

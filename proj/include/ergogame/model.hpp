#ifndef ERGOGAME_MODEL_HPP_
#define ERGOGAME_MODEL_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergogame {

using StateIndex = std::size_t;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RateEntry {
  StateIndex j;
  double q;
};

// Transition and cost data for one (state, a, b) triple. `jumps` holds the
// off-diagonal rates to stored states in ascending j. `escape` is the total
// rate towards states beyond the stored cap; it is nonzero only for models
// that stand in for an infinite chain.
struct ActionPairData {
  std::vector<RateEntry> jumps;
  double diagonal = 0.0;
  double escape = 0.0;
  double cost = 0.0;
};

class GameModel {
 public:
  GameModel() = default;

  std::size_t num_states() const { return num_states_; }
  const std::string& name() const { return name_; }
  StateIndex reference_state() const { return reference_state_; }
  bool conceptually_infinite() const { return conceptually_infinite_; }

  std::size_t num_actions_a(StateIndex i) const { return actions_a_[i].size(); }
  std::size_t num_actions_b(StateIndex i) const { return actions_b_[i].size(); }
  const std::vector<std::string>& actions_a(StateIndex i) const {
    return actions_a_[i];
  }
  const std::vector<std::string>& actions_b(StateIndex i) const {
    return actions_b_[i];
  }

  // Pairs of state i are stored row-major: index a * num_actions_b(i) + b.
  std::size_t pair_offset(StateIndex i) const { return offsets_[i]; }
  std::size_t pair_index(StateIndex i, std::size_t a, std::size_t b) const {
    return offsets_[i] + a * actions_b_[i].size() + b;
  }
  std::size_t num_pairs() const { return pairs_.size(); }

  const ActionPairData& pair(StateIndex i, std::size_t a,
                             std::size_t b) const {
    return pairs_[pair_index(i, a, b)];
  }
  std::span<const ActionPairData> pairs(StateIndex i) const {
    return {pairs_.data() + offsets_[i],
            actions_a_[i].size() * actions_b_[i].size()};
  }
  const ActionPairData& pair_at(std::size_t flat) const { return pairs_[flat]; }

  // q*(i) = max over action pairs of -q(i|i,a,b).
  double max_exit_rate(StateIndex i) const;
  double max_cost(StateIndex i) const;
  bool has_escape() const;

 private:
  friend class GameModelBuilder;

  std::string name_ = "model";
  std::size_t num_states_ = 0;
  StateIndex reference_state_ = 0;
  bool conceptually_infinite_ = false;
  std::vector<std::vector<std::string>> actions_a_;
  std::vector<std::vector<std::string>> actions_b_;
  std::vector<std::size_t> offsets_;
  std::vector<ActionPairData> pairs_;
};

// Incremental construction. Every state starts with one action per player
// labelled "0"; `actions` resets the pairs of that state. Rates given through
// `rates` may include the diagonal (j == i); when omitted it is reconstructed
// as the negative sum of the off-diagonal entries and the escape rate.
class GameModelBuilder {
 public:
  explicit GameModelBuilder(std::size_t num_states);

  GameModelBuilder& name(std::string name);
  GameModelBuilder& reference_state(StateIndex i0);
  GameModelBuilder& conceptually_infinite(bool flag);
  GameModelBuilder& actions(StateIndex i, std::vector<std::string> a_labels,
                            std::vector<std::string> b_labels);
  GameModelBuilder& rates(StateIndex i, std::size_t a, std::size_t b,
                          const std::vector<RateEntry>& entries,
                          double escape = 0.0);
  GameModelBuilder& cost(StateIndex i, std::size_t a, std::size_t b, double c);

  GameModel build() const;

 private:
  struct PendingPair {
    std::vector<RateEntry> entries;
    bool has_diagonal = false;
    double diagonal = 0.0;
    double escape = 0.0;
    double cost = 0.0;
  };
  PendingPair& at(StateIndex i, std::size_t a, std::size_t b);

  std::string name_ = "model";
  std::size_t num_states_;
  StateIndex reference_state_ = 0;
  bool conceptually_infinite_ = false;
  std::vector<std::vector<std::string>> actions_a_;
  std::vector<std::vector<std::string>> actions_b_;
  std::vector<std::vector<PendingPair>> pairs_;
};

enum class DriftMode { bounded_cost, unbounded_cost };

struct LyapunovData {
  std::vector<double> lyapunov;            // V, >= 1
  DriftMode mode = DriftMode::unbounded_cost;
  double uniform_drift_rate = 0.0;         // gamma_hat (bounded mode)
  std::vector<double> drift_rate;          // l_hat per state (unbounded mode)
  double drift_constant = 0.0;             // C
  std::vector<StateIndex> drift_set;       // K_hat
  double growth_slope = 0.0;               // b0
  double growth_offset = 0.0;              // b1
  double rate_bound = 0.0;                 // b2
  std::vector<double> explosion_lyapunov;  // V_tilde, >= 1
  // Mean of V (resp. V_tilde) over the mass a state sends beyond the stored
  // cap. Empty when unknown; capped rows are then reported as unverifiable.
  std::vector<double> lyapunov_beyond;
  std::vector<double> explosion_lyapunov_beyond;

  double rate(StateIndex i) const {
    return mode == DriftMode::bounded_cost ? uniform_drift_rate
                                           : drift_rate[i];
  }
  bool in_drift_set(StateIndex i) const;
};

// ---------------------------------------------------------------------------
// Validation.

struct Violation {
  std::string kind;
  StateIndex i = 0;
  std::size_t a = 0;
  std::size_t b = 0;
  StateIndex j = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool reachable_from_reference = true;
  bool irreducible = true;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_model(const GameModel& model, double tol = 1e-12);

// Invariants of LyapunovData alone (sizes, V >= 1, gamma_hat vs costs).
ValidationReport validate_lyapunov(const GameModel& model,
                                   const LyapunovData& lyap);

struct DriftStateReport {
  StateIndex i = 0;
  double drift_slack = 0.0;      // max_{a,b} of lhs - rhs of the drift law
  double growth_slack = 0.0;     // max_{a,b} of sum V_tilde q - b0 V_tilde - b1
  double rate_slack = 0.0;       // q*(i) - b2 V_tilde(i)
  std::size_t worst_a = 0;
  std::size_t worst_b = 0;
  bool verifiable = true;
};

struct DriftReport {
  std::vector<DriftStateReport> states;
  double drift_constant = 0.0;
  double rate_bound = 0.0;
  double growth_slope = 0.0;
  double growth_offset = 0.0;
  double worst_drift_slack = 0.0;
  StateIndex worst_state = 0;
  // Finite-range proxy for the norm-like condition: l_hat - max c is
  // nondecreasing from this state on within the checked range.
  StateIndex norm_like_threshold = 0;
  bool norm_like_proxy_ok = true;
  bool ok = true;
};

DriftReport check_drift(const GameModel& model, const LyapunovData& lyap,
                        StateIndex first, StateIndex last);

// ---------------------------------------------------------------------------
// Controlled birth-death example.

struct BirthDeathParams {
  double lambda_hat = 2.0;   // departure scale, rate lambda_hat (i+3)^2
  double mu_hat = 1.0;       // arrival scale, rate mu_hat i
  double fee = 0.5;          // per-customer reward fee p_hat
  double alpha = 402.0;      // mass of the state-0 jump kernel
  std::size_t max_state = 200;
  std::size_t grid_a = 3;
  std::size_t grid_b = 3;
  double penalty_a = 0.5;    // eps_a
  double penalty_b = 0.5;    // eps_b
  bool closed = false;       // fold mass beyond the cap back into the chain
  bool zero_cost = false;
};

struct BirthDeath {
  GameModel model;
  LyapunovData lyapunov;
};

BirthDeath build_birth_death(const BirthDeathParams& params);

// Sum over k >= first of k^-power for power >= 2, first >= 1.
double zeta_tail(int power, double first);

}  // namespace ergogame

#endif  // ERGOGAME_MODEL_HPP_

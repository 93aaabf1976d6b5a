#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ergogame/policy_eval.hpp"
#include "ergogame/simulate.hpp"
#include "fixtures.hpp"

using namespace ergogame;

namespace {

GameModel two_cycle(double c0, double c1) {
  GameModelBuilder b(2);
  b.rates(0, 0, 0, {{1, 1.0}});
  b.rates(1, 0, 0, {{0, 1.0}});
  b.cost(0, 0, 0, c0);
  b.cost(1, 0, 0, c1);
  return b.build();
}

// Two actions for player 1 at state 0 with different rates and costs.
GameModel mixed_two_state() {
  GameModelBuilder b(2);
  b.actions(0, {"slow", "fast"}, {"x"});
  b.rates(0, 0, 0, {{1, 0.5}});
  b.rates(0, 1, 0, {{1, 2.0}});
  b.cost(0, 0, 0, 0.2);
  b.cost(0, 1, 0, 1.0);
  b.rates(1, 0, 0, {{0, 1.0}});
  b.cost(1, 0, 0, 0.5);
  return b.build();
}

}  // namespace

TEST_CASE("absorbing state accrues cost to the horizon") {
  GameModelBuilder b(1);
  b.rates(0, 0, 0, {});
  b.cost(0, 0, 0, 0.75);
  GameModel m = b.build();
  auto p1 = fixtures::uniform_strategy(m, true);
  auto p2 = fixtures::uniform_strategy(m, false);
  Trajectory t = sample_trajectory(m, p1, p2, 0, 8.0, 1);
  CHECK(t.times.size() == 1);
  CHECK(t.jumps == 0);
  CHECK(t.total_cost == 0.75 * 8.0);
  CHECK_FALSE(t.exited);
}

TEST_CASE("jump count of a unit-rate cycle is Poisson") {
  GameModel m = two_cycle(0.0, 0.0);
  auto p1 = fixtures::uniform_strategy(m, true);
  auto p2 = fixtures::uniform_strategy(m, false);
  Simulator sim(m, p1, p2);
  const double horizon = 100.0;
  const int paths = 2000;
  double total = 0.0;
  for (int k = 0; k < paths; ++k) {
    Trajectory t = sim.sample(0, horizon, 9, k);
    CHECK(std::fabs(static_cast<double>(t.jumps) - horizon) <=
          5.0 * std::sqrt(horizon));
    for (std::size_t s = 1; s < t.times.size(); ++s) {
      CHECK(t.times[s] > t.times[s - 1]);
      CHECK(t.states[s] != t.states[s - 1]);
    }
    total += static_cast<double>(t.jumps);
  }
  CHECK(std::fabs(total / paths - horizon) <= 3.0 * std::sqrt(horizon / paths));
}

TEST_CASE("constant cost gives J exactly with zero error") {
  GameModel m = two_cycle(1.5, 1.5);
  auto p1 = fixtures::uniform_strategy(m, true);
  auto p2 = fixtures::uniform_strategy(m, false);
  RiskSensitiveEstimate e = estimate_J(m, p1, p2, 0, 50.0, 1000, 3);
  CHECK(e.j_hat == 1.5);
  CHECK(e.bootstrap_se == 0.0);
  CHECK(e.effective_sample_size == 1000.0);
  HorizonProfile p = horizon_profile(m, p1, p2, 0, {10.0, 40.0}, 100, 3);
  CHECK(p.slope == 0.0);
  CHECK(p.extrapolated == 1.5);
}

TEST_CASE("two-state pair: finite-horizon value and extrapolated limit") {
  GameModel m = two_cycle(0.0, 0.4);
  auto p1 = fixtures::uniform_strategy(m, true);
  auto p2 = fixtures::uniform_strategy(m, false);
  const double rho = evaluate_pair(m, p1, p2, Domain::all(m)).rho_pi;
  // [[-1, 1], [1, -0.6]]
  CHECK(rho == doctest::Approx(0.5 * (-1.6 + std::sqrt(0.16 + 4.0))));

  // Exact (1/T) log E_0[exp int c] = (1/T) log (e^{MT} 1)(0) by symmetric
  // eigendecomposition.
  Eigen::Matrix2d gen;
  gen << -1.0, 1.0, 1.0, -0.6;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gen);
  auto exact = [&](double horizon) {
    double s = 0.0, top = es.eigenvalues().maxCoeff() * horizon;
    for (int k = 0; k < 2; ++k) {
      const Eigen::Vector2d v = es.eigenvectors().col(k);
      s += std::exp(es.eigenvalues()(k) * horizon - top) * v(0) * v.sum();
    }
    return (top + std::log(s)) / horizon;
  };

  RiskSensitiveEstimate e = estimate_J(m, p1, p2, 0, 50.0, 100000, 11);
  CHECK(std::fabs(e.j_hat - exact(50.0)) <= 3.0 * e.bootstrap_se);
  CHECK(e.bootstrap_se > 0.0);
  CHECK(e.exit_fraction == 0.0);
  CHECK_FALSE(e.refused);

  // The 1/T term is removed by extrapolating from two horizons.
  HorizonProfile p = horizon_profile(m, p1, p2, 0, {25.0, 50.0}, 100000, 11);
  const double se1 = p.estimates[0].bootstrap_se;
  const double se2 = p.estimates[1].bootstrap_se;
  CHECK(std::fabs(p.extrapolated - rho) <=
        3.0 * std::sqrt(4.0 * se2 * se2 + se1 * se1));
  CHECK(p.slope < 0.0);
}

TEST_CASE("determinism across runs and thread counts") {
  BirthDeathParams bp;
  bp.max_state = 19;
  bp.closed = true;
  BirthDeath bd = build_birth_death(bp);
  auto p1 = fixtures::uniform_strategy(bd.model, true);
  auto p2 = fixtures::uniform_strategy(bd.model, false);
  EstimateOptions serial, parallel;
  parallel.threads = 4;
  RiskSensitiveEstimate a = estimate_J(bd.model, p1, p2, 0, 5.0, 4000, 77, serial);
  RiskSensitiveEstimate b = estimate_J(bd.model, p1, p2, 0, 5.0, 4000, 77, serial);
  RiskSensitiveEstimate c = estimate_J(bd.model, p1, p2, 0, 5.0, 4000, 77, parallel);
  CHECK(a.j_hat == b.j_hat);
  CHECK(a.j_hat == c.j_hat);
  CHECK(a.bootstrap_se == c.bootstrap_se);
  RiskSensitiveEstimate d = estimate_J(bd.model, p1, p2, 0, 5.0, 4000, 78, serial);
  CHECK(a.j_hat != d.j_hat);

  Simulator sim(bd.model, p1, p2, CostMode::realized);
  Trajectory t1 = sim.sample(0, 5.0, 77, 12);
  Trajectory t2 = sim.sample(0, 5.0, 77, 12);
  CHECK(t1.times == t2.times);
  CHECK(t1.states == t2.states);
  CHECK(t1.action_a == t2.action_a);

  SUBCASE("Jensen direction and sign") {
    CHECK(a.j_hat >= a.mean_cost_rate - 1e-12);
    CHECK(a.j_hat >= -1e-12);
    CHECK(a.effective_sample_size > 0.0);
    CHECK(a.effective_sample_size <= 4000.0);
  }
}

TEST_CASE("aggregation is invariant under permuting paths") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(20.0, 3.0);
  std::vector<double> s(5000);
  for (double& v : s) v = n(rng);
  RiskSensitiveEstimate a = aggregate_J(s, 40.0, 1, 0);
  std::shuffle(s.begin(), s.end(), rng);
  RiskSensitiveEstimate b = aggregate_J(s, 40.0, 1, 0);
  CHECK(std::fabs(a.j_hat - b.j_hat) <= 1e-12);
  CHECK(a.max_exponent == b.max_exponent);
  // Large exponents do not overflow.
  for (double& v : s) v += 5000.0;
  RiskSensitiveEstimate c = aggregate_J(s, 40.0, 1, 0);
  CHECK(std::isfinite(c.j_hat));
  CHECK(c.j_hat == doctest::Approx(b.j_hat + 5000.0 / 40.0).epsilon(1e-12));
}

TEST_CASE("realized and expected cost modes agree in mean") {
  GameModel m = mixed_two_state();
  StationaryStrategy p1, p2;
  p1.dist = {{0.3, 0.7}, {1.0}};
  p2.dist = {{1.0}, {1.0}};
  RiskSensitiveEstimate ex = estimate_J(m, p1, p2, 0, 20.0, 20000, 5);
  EstimateOptions o;
  o.mode = CostMode::realized;
  RiskSensitiveEstimate re = estimate_J(m, p1, p2, 0, 20.0, 20000, 5, o);
  // Same jump chain law, so the mean cost rates agree up to noise.
  CHECK(std::fabs(ex.mean_cost_rate - re.mean_cost_rate) <= 0.01);
  CHECK(re.j_hat >= ex.j_hat - 3.0 * (ex.bootstrap_se + re.bootstrap_se));

  Simulator sim(m, p1, p2, CostMode::realized);
  Trajectory t = sim.sample(0, 5.0, 1, 0);
  std::ostringstream csv;
  write_trajectory_csv(csv, m, t);
  CHECK(csv.str().rfind("t,state,a_label,b_label,cost_rate\n0,0,", 0) == 0);
  Trajectory e = Simulator(m, p1, p2).sample(0, 5.0, 1, 0);
  std::ostringstream csv2;
  write_trajectory_csv(csv2, m, e);
  CHECK(csv2.str().find(",mixed,") != std::string::npos);
}

TEST_CASE("leaving the stored truncation is flagged and refused") {
  BirthDeathParams bp;
  bp.max_state = 3;
  BirthDeath bd = build_birth_death(bp);
  auto p1 = fixtures::uniform_strategy(bd.model, true);
  auto p2 = fixtures::uniform_strategy(bd.model, false);
  RiskSensitiveEstimate e = estimate_J(bd.model, p1, p2, 0, 20.0, 2000, 1);
  CHECK(e.exited > 0);
  CHECK(e.exit_fraction > 0.01);
  CHECK(e.refused);
}

TEST_CASE("occupation concentrates at the drift set") {
  BirthDeathParams bp;
  bp.max_state = 19;
  bp.closed = true;
  BirthDeath bd = build_birth_death(bp);
  auto p1 = fixtures::uniform_strategy(bd.model, true);
  auto p2 = fixtures::uniform_strategy(bd.model, false);
  Simulator sim(bd.model, p1, p2);
  double at_zero = 0.0, total = 0.0;
  for (int k = 0; k < 200; ++k) {
    Trajectory t = sim.sample(10, 20.0, 2, k);
    for (std::size_t s = 0; s < t.times.size(); ++s) {
      const double end = s + 1 < t.times.size() ? t.times[s + 1] : t.horizon;
      if (t.states[s] == 0) at_zero += end - t.times[s];
      total += end - t.times[s];
    }
  }
  CHECK(at_zero / total > 0.5);
}

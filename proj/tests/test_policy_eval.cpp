#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ergogame/eigen.hpp"
#include "ergogame/policy_eval.hpp"
#include "fixtures.hpp"

using namespace ergogame;

namespace {

GameModel two_state(double q01, double q10, double c0, double c1) {
  GameModelBuilder b(2);
  b.rates(0, 0, 0, {{1, q01}});
  b.rates(1, 0, 0, {{0, q10}});
  b.cost(0, 0, 0, c0);
  b.cost(1, 0, 0, c1);
  return b.build();
}

// Largest eigenvalue of [[m00, m01], [m10, m11]] with m01 m10 >= 0.
double quadratic_root(double m00, double m01, double m10, double m11) {
  return 0.5 * (m00 + m11 + std::sqrt((m00 - m11) * (m00 - m11) + 4 * m01 * m10));
}

struct Solved {
  BirthDeath bd;
  Domain domain;
  EigenSolution solution;
  SelectorPair selectors;
};

const Solved& radius_50() {
  static const Solved s = [] {
    Solved out{build_birth_death({}), {}, {}, {}};
    out.domain = Domain::ball(out.bd.model, 50);
    out.solution = dirichlet_eigenpair(out.bd.model, out.domain, 1.0);
    out.selectors = extract_selectors(out.bd.model, out.solution, 1e-8);
    return out;
  }();
  return s;
}

}  // namespace

TEST_CASE("closed forms") {
  GameModel m = two_state(2.0, 1.0, 1.0, 0.0);
  auto one = fixtures::uniform_strategy(m, true);
  auto two = fixtures::uniform_strategy(m, false);
  PolicyEvaluation single = evaluate_pair(m, one, two, Domain(2, {0}));
  CHECK(single.rho_pi == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(single.psi_pi[0] == 1.0);

  for (auto method : {PerronMethod::resolvent, PerronMethod::shifted_power}) {
    EvalOptions o;
    o.method = method;
    GameModel m2 = two_state(1.5, 0.5, 0.3, 2.0);
    PolicyEvaluation ev = evaluate_pair(m2, one, two, Domain::all(m2), o);
    CHECK(std::fabs(ev.rho_pi - quadratic_root(-1.5 + 0.3, 1.5, 0.5,
                                               -0.5 + 2.0)) <= 1e-9);
    CHECK(ev.residual <= 1e-9);
    CHECK(ev.irreducible);
  }
}

TEST_CASE("random pairs match the dense Perron root; both methods agree") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    GameModel m = fixtures::random_game(rng, 7, 3);
    auto p1 = fixtures::uniform_strategy(m, true);
    auto p2 = fixtures::uniform_strategy(m, false);
    Domain d = Domain::all(m);
    EvalOptions o;
    o.require_irreducible = false;
    PolicyEvaluation res = evaluate_pair(m, p1, p2, d, o);
    o.method = PerronMethod::shifted_power;
    PolicyEvaluation pow = evaluate_pair(m, p1, p2, d, o);
    const double oracle =
        fixtures::perron_root(fixtures::twisted_generator(m, p1, p2, d));
    CHECK(std::fabs(res.rho_pi - oracle) <= 1e-9);
    CHECK(std::fabs(pow.rho_pi - oracle) <= 1e-8);
    if (res.irreducible) {
      for (double v : res.psi_pi) CHECK(v > 0.0);
    }
    // Gershgorin-style sanity bound.
    double lo = INFINITY, hi = -INFINITY;
    for (StateIndex i = 0; i < 7; ++i) {
      MixedRow row = mix_row(m, i, p1.dist[i], p2.dist[i]);
      lo = std::min(lo, row.cost - m.max_exit_rate(i));
      hi = std::max(hi, row.cost + m.max_exit_rate(i));
    }
    CHECK(res.rho_pi >= lo);
    CHECK(res.rho_pi <= hi);
  }
}

TEST_CASE("raising the cost never lowers rho") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int t = 0; t < 10; ++t) {
    GameModel m = fixtures::random_game(rng, 6, 2);
    GameModelBuilder b(6);
    for (StateIndex i = 0; i < 6; ++i) {
      b.actions(i, m.actions_a(i), m.actions_b(i));
      for (std::size_t a = 0; a < m.num_actions_a(i); ++a) {
        for (std::size_t bb = 0; bb < m.num_actions_b(i); ++bb) {
          const ActionPairData& p = m.pair(i, a, bb);
          b.rates(i, a, bb, p.jumps);
          b.cost(i, a, bb, p.cost + u(rng));
        }
      }
    }
    GameModel raised = b.build();
    auto p1 = fixtures::uniform_strategy(m, true);
    auto p2 = fixtures::uniform_strategy(m, false);
    EvalOptions o;
    o.require_irreducible = false;
    const double base = evaluate_pair(m, p1, p2, Domain::all(m), o).rho_pi;
    const double more =
        evaluate_pair(raised, p1, p2, Domain::all(m), o).rho_pi;
    CHECK(more >= base - 1e-9);
  }
}

TEST_CASE("reducible support names its components") {
  GameModelBuilder b(3);
  b.rates(0, 0, 0, {{1, 1.0}});
  b.rates(1, 0, 0, {{2, 1.0}});
  b.rates(2, 0, 0, {{0, 1.0}});
  GameModel m = b.build();
  auto p1 = fixtures::uniform_strategy(m, true);
  auto p2 = fixtures::uniform_strategy(m, false);
  try {
    evaluate_pair(m, p1, p2, Domain(3, {0, 1}));
    FAIL("expected ReducibleSupport");
  } catch (const ReducibleSupport& e) {
    CHECK(e.components() == Components{{0}, {1}});
  }
  CHECK(evaluate_pair(m, p1, p2, Domain::all(m)).irreducible);
}

TEST_CASE("strongly connected components") {
  // 0 -> 1 -> 2 -> 0, 2 -> 3, 3 -> 4 -> 3, 5 isolated
  std::vector<std::vector<std::size_t>> g = {{1}, {2}, {0, 3}, {4}, {3}, {}};
  auto c = strongly_connected_components(g);
  CHECK(c == std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4}, {5}});
}

TEST_CASE("selector pair attains the eigenvalue on the same truncation") {
  const Solved& s = radius_50();
  PolicyEvaluation ev = evaluate_pair(s.bd.model, s.selectors.pi1,
                                      s.selectors.pi2, s.domain);
  CHECK(std::fabs(ev.rho_pi - s.solution.rho) <= 5e-8);
  for (StateIndex i : s.domain.states()) CHECK(ev.psi_pi[i] > 0.0);
}

TEST_CASE("deviation sweep certifies the saddle point") {
  const Solved& s = radius_50();
  DeviationReport rep = deviation_sweep(s.bd.model, s.selectors.pi1,
                                        s.selectors.pi2, s.domain, 1e-6);
  CHECK(rep.ok);
  CHECK(rep.violations == 0);
  CHECK(rep.deviations.size() > 50);
  CHECK(rep.worst_slack_p1 <= 1e-6);
  CHECK(rep.worst_slack_p2 <= 1e-6);

  std::ostringstream csv;
  write_deviations_csv(csv, rep);
  CHECK(csv.str().rfind("state,player,action,rho_deviated,slack\n", 0) == 0);

  SUBCASE("negative control") {
    // Move player 1 at state 1 onto the action that pays least against pi2.
    StationaryStrategy bad = s.selectors.pi1;
    const StateIndex i = 1;
    std::size_t worst = 0;
    double worst_val = INFINITY;
    for (std::size_t a = 0; a < s.bd.model.num_actions_a(i); ++a) {
      double v = 0.0;
      for (std::size_t b = 0; b < s.bd.model.num_actions_b(i); ++b) {
        const ActionPairData& p = s.bd.model.pair(i, a, b);
        double e = (p.diagonal + p.cost) * s.solution.psi[i];
        for (const auto& j : p.jumps) e += s.solution.psi[j.j] * j.q;
        v += s.selectors.pi2.dist[i][b] * e;
      }
      if (v < worst_val) {
        worst_val = v;
        worst = a;
      }
    }
    std::fill(bad.dist[i].begin(), bad.dist[i].end(), 0.0);
    bad.dist[i][worst] = 1.0;
    DeviationReport neg = deviation_sweep(s.bd.model, bad, s.selectors.pi2,
                                          s.domain, 1e-6);
    CHECK_FALSE(neg.ok);
    CHECK(neg.violations >= 1);
  }
}

TEST_CASE("uncontrolled model has nothing to deviate to") {
  GameModel m = fixtures::mm1(10, 1.0, 2.0, 0.1);
  auto p1 = fixtures::uniform_strategy(m, true);
  auto p2 = fixtures::uniform_strategy(m, false);
  DeviationReport rep = deviation_sweep(m, p1, p2, Domain::all(m), 1e-6);
  CHECK(rep.deviations.empty());
  CHECK(rep.ok);
}

TEST_CASE("exit-time spot checks") {
  SUBCASE("degenerate weights give exactly V") {
    GameModel m = fixtures::mm1(5, 1.0, 2.0, 0.0);
    LyapunovData ly;
    ly.lyapunov.assign(5, 1.0);
    ly.drift_rate.assign(5, 0.0);
    ly.drift_set = {0};
    auto p1 = fixtures::uniform_strategy(m, true);
    auto p2 = fixtures::uniform_strategy(m, false);
    SpotReport r = exit_bound_spotcheck(m, ly, p1, p2, {0}, {3}, 1000, 5);
    REQUIRE(r.starts.size() == 1);
    CHECK(r.starts[0].estimate == 1.0);
    CHECK(r.starts[0].se == 0.0);
    CHECK(r.ok);
  }
  SUBCASE("birth-death selectors from state 10 into {0..5}") {
    const Solved& s = radius_50();
    SpotReport r = exit_bound_spotcheck(
        s.bd.model, s.bd.lyapunov, s.selectors.pi1, s.selectors.pi2,
        {0, 1, 2, 3, 4, 5}, {10}, 100000, 2024);
    REQUIRE(r.starts.size() == 1);
    CHECK(r.starts[0].estimate <= 169.0);
    CHECK(r.starts[0].unabsorbed_fraction == 0.0);
    CHECK(r.ok);
    CHECK_FALSE(r.caveat.empty());
  }
  SUBCASE("one transient state with strong inward drift") {
    const Solved& s = radius_50();
    std::vector<StateIndex> target;
    for (StateIndex i = 0; i < s.bd.model.num_states(); ++i) {
      if (i != 7) target.push_back(i);
    }
    SpotReport r = exit_bound_spotcheck(s.bd.model, s.bd.lyapunov,
                                        s.selectors.pi1, s.selectors.pi2,
                                        target, {7}, 20000, 3);
    CHECK(r.starts[0].estimate < s.bd.lyapunov.lyapunov[7]);
  }
  SUBCASE("preconditions") {
    const Solved& s = radius_50();
    CHECK_THROWS_AS(exit_bound_spotcheck(s.bd.model, s.bd.lyapunov,
                                         s.selectors.pi1, s.selectors.pi2,
                                         {1, 2}, {10}, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(exit_bound_spotcheck(s.bd.model, s.bd.lyapunov,
                                         s.selectors.pi1, s.selectors.pi2,
                                         {0, 1, 2}, {2}, 10, 1),
                    std::invalid_argument);
  }
}

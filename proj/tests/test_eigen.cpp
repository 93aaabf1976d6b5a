#include <doctest.h>

#include <cmath>

#include "ergogame/eigen.hpp"
#include "fixtures.hpp"

using namespace ergogame;

namespace {

LyapunovData flat_lyapunov(const GameModel& m) {
  LyapunovData ly;
  ly.lyapunov.assign(m.num_states(), 1.0);
  ly.explosion_lyapunov.assign(m.num_states(), 1.0);
  ly.drift_rate.assign(m.num_states(), 0.0);
  ly.drift_set = {m.reference_state()};
  return ly;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("single-state domain") {
  GameModelBuilder b(2);
  b.rates(0, 0, 0, {{1, 2.0}});
  b.cost(0, 0, 0, 1.0);
  b.rates(1, 0, 0, {{0, 1.0}});
  GameModel m = b.build();
  Domain d(2, {0});
  EigenSolution s = dirichlet_eigenpair(m, d, 0.5);
  CHECK(s.rho == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(s.psi[0] == 1.0);
  CHECK(s.psi[1] == 0.0);
  BoundsReport br = eigen_bounds_check(s, m, nullptr);
  CHECK(br.lower_bound == -2.0);
  CHECK(br.ok);
}

TEST_CASE("two-state chain matches the dense Perron root") {
  GameModelBuilder b(2);
  b.rates(0, 0, 0, {{1, 1.0}});
  b.rates(1, 0, 0, {{0, 1.0}});
  b.cost(1, 0, 0, 2.0);
  GameModel m = b.build();
  Eigen::Matrix2d dense;
  dense << -1, 1, 1, 1;
  const double oracle = fixtures::perron_root(dense);
  CHECK(oracle == doctest::Approx(std::sqrt(2.0)));
  EigenSolution s = dirichlet_eigenpair(m, Domain::all(m), 1.0);
  CHECK(std::fabs(s.rho - oracle) <= 1e-9);
  CHECK(s.residual <= 1e-9);
  // psi(1) from the first row: -1 + psi(1) = rho.
  CHECK(s.psi[1] == doctest::Approx(1.0 + oracle).epsilon(1e-9));
}

TEST_CASE("random controlled games: residual and minimax gap") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    GameModel m = fixtures::random_game(rng, 8, 3);
    Domain d(8, {0, 1, 2, 3, 4, 5});
    EigenSolution s = dirichlet_eigenpair(m, d, 0.5);
    CHECK(s.residual <= 1e-9);
    CHECK(s.psi[0] == 1.0);
    for (double v : s.psi) CHECK(v >= 0.0);
    CHECK(s.psi[6] == 0.0);
    SelectorPair sel = extract_selectors(m, s, 1e-8);
    CHECK(sel.max_duality_gap <= 1e-8);
    CHECK(eigen_bounds_check(s, m, nullptr).ok);
  }
}

TEST_CASE("delta does not change the eigenpair") {
  BirthDeath bd = build_birth_death({});
  Domain d = Domain::ball(bd.model, 100);
  EigenSolution a = dirichlet_eigenpair(bd.model, d, 0.1);
  EigenSolution b = dirichlet_eigenpair(bd.model, d, 1.0);
  CHECK(std::fabs(a.rho - b.rho) <= 1e-8);
  CHECK(sup_diff(a.psi, b.psi) <= 1e-8);
}

TEST_CASE("Lyapunov scaling") {
  BirthDeath bd = build_birth_death({});
  EigenSolution s;
  s.domain = Domain::ball(bd.model, 10);
  s.psi.assign(bd.model.num_states(), 0.0);
  for (StateIndex i = 0; i <= 10; ++i) s.psi[i] = bd.lyapunov.lyapunov[i];
  EigenSolution same = lyapunov_scale(s, bd.lyapunov);
  CHECK(same.theta == 1.0);
  CHECK(same.psi == s.psi);
  for (double& v : s.psi) v /= 2.0;
  EigenSolution doubled = lyapunov_scale(s, bd.lyapunov);
  CHECK(doubled.theta == 2.0);
  CHECK(doubled.touch_state == 0);
  CHECK(doubled.touch_in_drift_set);
  CHECK(doubled.normalization == "touches V");
  s.psi.assign(s.psi.size(), 0.0);
  CHECK_THROWS_AS(lyapunov_scale(s, bd.lyapunov), EigenError);
}

TEST_CASE("birth-death ladder") {
  BirthDeath bd = build_birth_death({});
  auto ladder = TruncationLadder::balls(bd.model, {25, 50, 100, 200});
  EigenSolution s = ladder_limit(bd.model, bd.lyapunov, ladder, 1.0);
  REQUIRE(s.ladder_trace.size() == 4);
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(s.ladder_trace[n].residual <= 1e-9);
    if (n > 0) CHECK(s.ladder_trace[n].rho >= s.ladder_trace[n - 1].rho);
  }
  CHECK(s.rho >= 0.0);
  CHECK(s.psi[0] == 1.0);
  CHECK(s.whole_space);
  CHECK(s.window.size() == 26);
  // State 0 sends mass beyond every truncation.
  CHECK(s.residual_excluded == std::vector<StateIndex>{0});

  BoundsReport br = eigen_bounds_check(s, bd.model, &bd.lyapunov);
  CHECK(br.upper_applicable);
  CHECK(br.k1 == 0.0);
  CHECK(br.checks.size() == 4);
  CHECK(br.ok);

  SUBCASE("selectors are invariant under rescaling psi") {
    SelectorPair sel = extract_selectors(bd.model, s, 1e-8);
    EigenSolution scaled = s;
    for (double& v : scaled.psi) v *= 7.0;
    SelectorPair sel7 = extract_selectors(bd.model, scaled, 1e-8);
    for (StateIndex i = 0; i < bd.model.num_states(); ++i) {
      CHECK(sup_diff(sel.pi1.dist[i], sel7.pi1.dist[i]) <= 1e-8);
      CHECK(sup_diff(sel.pi2.dist[i], sel7.pi2.dist[i]) <= 1e-8);
    }
  }

  SUBCASE("a corrupted psi fails selector extraction") {
    EigenSolution bad = s;
    bad.psi[3] *= 1.01;
    CHECK_THROWS_AS(extract_selectors(bd.model, bad, 1e-8), EigenError);
  }
}

TEST_CASE("zero cost: rho below zero and rising, psi near one") {
  BirthDeathParams p;
  p.zero_cost = true;
  BirthDeath bd = build_birth_death(p);
  auto ladder = TruncationLadder::balls(bd.model, {25, 50, 100, 200});
  EigenSolution s = ladder_limit(bd.model, bd.lyapunov, ladder, 1.0);
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(s.ladder_trace[n].rho < 0.0);
    if (n > 0) CHECK(s.ladder_trace[n].rho > s.ladder_trace[n - 1].rho);
  }
  CHECK(std::fabs(s.rho) <= 1e-3);
  for (StateIndex i : s.window) CHECK(std::fabs(s.psi[i] - 1.0) <= 1e-3);
  BoundsReport br = eigen_bounds_check(s, bd.model, &bd.lyapunov);
  CHECK(br.k1 == 0.0);
  CHECK(br.ok);
}

TEST_CASE("linear-cost chain ladder matches the dense eigensolver") {
  GameModel m = fixtures::mm1(101, 1.0, 2.0, 0.1);
  LyapunovData ly = flat_lyapunov(m);
  auto ladder = TruncationLadder::balls(m, {25, 50, 100});
  EigenSolution s = ladder_limit(m, ly, ladder, 1.0);
  StationaryStrategy one = fixtures::uniform_strategy(m, true);
  const double oracle = fixtures::perron_root(
      fixtures::twisted_generator(m, one, one, ladder.domains.back()));
  CHECK(std::fabs(s.rho - oracle) <= 1e-6);
  for (std::size_t n = 0; n < 3; ++n) {
    const double level = fixtures::perron_root(
        fixtures::twisted_generator(m, one, one, ladder.domains[n]));
    CHECK(std::fabs(s.ladder_trace[n].rho - level) <= 1e-6);
  }
  SelectorPair sel = extract_selectors(m, s, 1e-8);
  for (StateIndex i = 0; i < m.num_states(); ++i) {
    CHECK(sel.pi1.dist[i] == std::vector<double>{1.0});
    CHECK(sel.pi2.dist[i] == std::vector<double>{1.0});
  }
}

TEST_CASE("failure modes") {
  BirthDeath bd = build_birth_death({});
  auto short_ladder = TruncationLadder::balls(bd.model, {10});
  try {
    ladder_limit(bd.model, bd.lyapunov, short_ladder, 1.0);
    FAIL("expected non-convergence");
  } catch (const LadderNotConverged& e) {
    CHECK(e.partial().ladder_trace.size() == 1);
  }
  EigenOptions o;
  o.max_iterations = 1;
  o.tol = 1e-14;
  CHECK_THROWS_AS(dirichlet_eigenpair(bd.model, Domain::ball(bd.model, 25),
                                      1.0, o),
                  EigenError);
  Domain no_ref(bd.model.num_states(), {3, 4});
  CHECK_THROWS_AS(dirichlet_eigenpair(bd.model, no_ref, 1.0), EigenError);
}

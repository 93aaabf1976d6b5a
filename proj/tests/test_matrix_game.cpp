#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ergogame/matrix_game.hpp"

using ergogame::game_value_oracle;
using ergogame::solve_matrix_game;
using ergogame::solve_matrix_game_fast;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

void check_strategy(const std::vector<double>& p) {
  double sum = 0.0;
  for (double v : p) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(std::fabs(sum - 1.0) <= 1e-12);
}

// Closed form for 2 x 2 games without a pure saddle point.
double two_by_two_value(const Eigen::MatrixXd& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const double maximin = std::max(std::min(a, b), std::min(c, d));
  const double minimax = std::min(std::max(a, c), std::max(b, d));
  if (maximin == minimax) return maximin;
  return (a * d - b * c) / (a + d - b - c);
}

}  // namespace

TEST_CASE("single entry") {
  Eigen::MatrixXd m(1, 1);
  m << 5.0;
  auto s = solve_matrix_game(m);
  CHECK(s.value == doctest::Approx(5.0));
  CHECK(s.row_strategy == std::vector<double>{1.0});
  CHECK(s.col_strategy == std::vector<double>{1.0});
  CHECK(game_value_oracle(m) == doctest::Approx(5.0));
}

TEST_CASE("matching pennies") {
  Eigen::MatrixXd m(2, 2);
  m << 1, -1, -1, 1;
  auto s = solve_matrix_game(m);
  CHECK(std::fabs(s.value) <= 1e-12);
  CHECK(s.row_strategy[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.col_strategy[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::fabs(game_value_oracle(m)) <= 1e-12);
}

TEST_CASE("indifference equations on a 2x2 game") {
  Eigen::MatrixXd m(2, 2);
  m << 3, 1, 0, 2;
  // Row p: 3p = p + 2(1-p) -> p = 1/2. Column q: 3q + (1-q) = 2(1-q) -> 1/4.
  auto s = solve_matrix_game(m);
  CHECK(s.value == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(s.row_strategy[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.row_strategy[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.col_strategy[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.col_strategy[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.duality_gap <= 1e-10);
}

TEST_CASE("random 2x2 games agree with the closed form") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    Eigen::MatrixXd m = random_matrix(rng, 2, 2);
    CHECK(solve_matrix_game(m).value ==
          doctest::Approx(two_by_two_value(m)).epsilon(1e-10));
  }
}

TEST_CASE("random games agree with vertex enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int t = 0; t < 300; ++t) {
    const int r = dim(rng), c = dim(rng);
    Eigen::MatrixXd m = random_matrix(rng, r, c);
    auto s = solve_matrix_game(m);
    const double oracle = game_value_oracle(m);
    CHECK(std::fabs(s.value - oracle) <= 1e-9);
    CHECK(s.duality_gap <= 1e-9);
    CHECK(s.duality_gap >= -1e-9);
    CHECK(s.value >= m.minCoeff());
    CHECK(s.value <= m.maxCoeff());
    check_strategy(s.row_strategy);
    check_strategy(s.col_strategy);
    auto f = solve_matrix_game_fast(m);
    CHECK(std::fabs(f.value - oracle) <= 1e-9);
  }
}

TEST_CASE("affine equivariance, monotonicity and transpose antisymmetry") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 5);
  const double tol = 1e-10;
  for (int t = 0; t < 100; ++t) {
    const int r = dim(rng), c = dim(rng);
    Eigen::MatrixXd m = random_matrix(rng, r, c);
    auto s = solve_matrix_game(m, tol);

    Eigen::MatrixXd affine = 3.5 * m.array() + 2.0;
    auto sa = solve_matrix_game(affine, tol);
    CHECK(sa.value == doctest::Approx(3.5 * s.value + 2.0).epsilon(1e-10));
    for (int i = 0; i < r; ++i) {
      CHECK(std::fabs(sa.row_strategy[i] - s.row_strategy[i]) <= 1e-8);
    }
    for (int j = 0; j < c; ++j) {
      CHECK(std::fabs(sa.col_strategy[j] - s.col_strategy[j]) <= 1e-8);
    }

    Eigen::MatrixXd bumped = m;
    bumped(rng() % r, rng() % c) += 1.0;
    CHECK(solve_matrix_game(bumped, tol).value <= s.value + 1.0 + 2 * tol);
    CHECK(solve_matrix_game(bumped, tol).value >= s.value - 2 * tol);

    Eigen::MatrixXd neg_t = -m.transpose();
    CHECK(std::fabs(solve_matrix_game(neg_t, tol).value + s.value) <=
          2 * tol + 1e-12);
  }
}

TEST_CASE("ties resolve to the lexicographically smallest strategy") {
  Eigen::MatrixXd m(3, 2);
  m << 1, 1, 1, 1, 0, 0;
  auto s = solve_matrix_game(m);
  // Rows 0 and 1 are both optimal; the smallest vector puts all mass on 1.
  CHECK(s.row_strategy[0] == doctest::Approx(0.0));
  CHECK(s.row_strategy[1] == doctest::Approx(1.0));
  CHECK(s.col_strategy[0] == doctest::Approx(0.0));
  CHECK(s.col_strategy[1] == doctest::Approx(1.0));
  auto again = solve_matrix_game(m);
  CHECK(again.row_strategy == s.row_strategy);
}

TEST_CASE("non-finite entries are rejected") {
  Eigen::MatrixXd m(1, 2);
  m << 1.0, NAN;
  CHECK_THROWS_AS(solve_matrix_game(m), std::invalid_argument);
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(13, 2);
  CHECK_THROWS_AS(game_value_oracle(big), std::invalid_argument);
}

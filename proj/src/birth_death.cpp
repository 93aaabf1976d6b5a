#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "ergogame/model.hpp"

namespace ergogame {

double zeta_tail(int power, double first) {
  if (power < 2 || first < 1.0) throw ModelError("zeta_tail: bad arguments");
  // Direct sum over a block, then Euler-Maclaurin for the rest.
  constexpr int kBlock = 2000;
  const double n = first + kBlock;
  const double s = power;
  double tail = std::pow(n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(n, -s) +
                s * std::pow(n, -s - 1.0) / 12.0 -
                s * (s + 1.0) * (s + 2.0) * std::pow(n, -s - 3.0) / 720.0;
  for (int k = kBlock - 1; k >= 0; --k) tail += std::pow(first + k, -s);
  return tail;
}

namespace {

std::string label(const char* prefix, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.6g", prefix, x);
  return buf;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 1) return {0.0};
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return v;
}

void require(bool cond, const std::string& what) {
  if (!cond) throw ModelError("birth-death parameters violate " + what);
}

}  // namespace

BirthDeath build_birth_death(const BirthDeathParams& p) {
  require(p.mu_hat > 0.0, "mu_hat > 0");
  require(p.lambda_hat >= std::max(p.mu_hat, 2.0),
          "lambda_hat >= max(mu_hat, 2)");
  require(p.fee > 0.0, "p_hat > 0");
  require(p.fee < 1.0, "p_hat < 1");
  require(p.alpha > 0.0, "alpha > 0");
  require(p.grid_a >= 1 && p.grid_b >= 1, "nonempty action grids");
  require(p.penalty_a >= 0.0 && p.penalty_b >= 0.0, "eps_a, eps_b >= 0");
  require(p.max_state >= 1, "max_state >= 1");

  const double pi = std::numbers::pi;
  // sum_{j>=1} (j+3)^-4
  const double s4 = zeta_tail(4, 4.0);
  const double state0_rate = p.alpha * s4;
  require(state0_rate >= 3.0, "q(0|0,a,b) <= -3");

  const std::size_t S = p.max_state;
  const std::size_t n = S + 1;
  const double mu = p.mu_hat;
  const double lam = p.lambda_hat;

  const std::vector<double> a0 = [&] {
    std::vector<double> v(p.grid_a);
    for (std::size_t k = 0; k < p.grid_a; ++k) {
      v[k] = mu * static_cast<double>(k + 1) / static_cast<double>(p.grid_a);
    }
    return v;
  }();
  const std::vector<double> a_grid = linspace(-0.5 * mu, mu, p.grid_a);
  const std::vector<double> b_grid = linspace(-lam, lam, p.grid_b);

  auto h1_cost = [&](double i, double a) {
    return 0.5 * p.fee * i + p.penalty_a * (a / mu) * (a / mu);
  };
  auto h2_cost = [&](double b) {
    return p.penalty_a + p.penalty_b * (b / lam) * (b / lam);
  };

  GameModelBuilder builder(n);
  builder.name(p.closed ? "birth-death (closed)" : "birth-death")
      .reference_state(0)
      .conceptually_infinite(!p.closed);

  // State 0: arrivals of any size, independent of the actions.
  {
    std::vector<std::string> la, lb{label("b", 0.0)};
    for (double a : a0) {
      require(a > 0.0, "h1(0,a) > 0");
      la.push_back(label("a", a));
    }
    builder.actions(0, la, lb);
    std::vector<RateEntry> row;
    for (std::size_t j = 1; j <= S; ++j) {
      row.push_back({j, p.alpha / std::pow(static_cast<double>(j) + 3.0, 4)});
    }
    const double beyond = p.alpha * zeta_tail(4, static_cast<double>(S) + 4.0);
    double escape = 0.0;
    if (p.closed) {
      row.back().q += beyond;
    } else {
      escape = beyond;
    }
    for (std::size_t k = 0; k < a0.size(); ++k) {
      builder.rates(0, k, 0, row, escape);
      builder.cost(0, k, 0,
                   p.zero_cost ? 0.0 : h2_cost(0.0) - h1_cost(0.0, a0[k]));
    }
  }

  for (std::size_t i = 1; i <= S; ++i) {
    const double x = static_cast<double>(i);
    std::vector<std::string> la, lb;
    for (double a : a_grid) la.push_back(label("a", a));
    for (double b : b_grid) lb.push_back(label("b", b));
    builder.actions(i, la, lb);
    for (std::size_t ka = 0; ka < a_grid.size(); ++ka) {
      const double a = a_grid[ka];
      const double up = mu * x + a;
      require(up > 0.0, "mu_hat i + h1(i,a) > 0");
      require(std::fabs(a) <= mu, "h1 in [-mu_hat, mu_hat]");
      for (std::size_t kb = 0; kb < b_grid.size(); ++kb) {
        const double b = b_grid[kb];
        const double down = lam * (x + 3.0) * (x + 3.0) + b;
        require(down > 0.0, "lambda_hat (i+3)^2 + h2(i,b) > 0");
        require(std::fabs(b) <= lam, "h2 in [-lambda_hat, lambda_hat]");
        std::vector<RateEntry> row{{i - 1, down}};
        double escape = 0.0;
        if (i < S) {
          row.push_back({i + 1, up});
        } else if (!p.closed) {
          escape = up;
        }
        builder.rates(i, ka, kb, row, escape);
        const double c = p.fee * x - h1_cost(x, a) + h2_cost(b);
        require(c >= 0.0, "nonnegative cost");
        builder.cost(i, ka, kb, p.zero_cost ? 0.0 : c);
      }
    }
  }

  BirthDeath out{builder.build(), {}};
  LyapunovData& ly = out.lyapunov;
  ly.mode = DriftMode::unbounded_cost;
  ly.lyapunov.resize(n);
  ly.drift_rate.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) + 3.0;
    ly.lyapunov[i] = x * x;
    ly.drift_rate[i] = x;
  }
  ly.explosion_lyapunov = ly.lyapunov;
  ly.drift_constant = p.alpha * pi * pi / 6.0;
  ly.drift_set = {0};
  ly.growth_slope = 1.0;
  ly.growth_offset = ly.drift_constant;
  ly.rate_bound = std::max(2.0 * lam, state0_rate);
  if (!p.closed) {
    ly.lyapunov_beyond.assign(n, 0.0);
    const double first = static_cast<double>(S) + 4.0;
    ly.lyapunov_beyond[0] = zeta_tail(2, first) / zeta_tail(4, first);
    const double top = static_cast<double>(S) + 4.0;
    ly.lyapunov_beyond[S] = top * top;
    ly.explosion_lyapunov_beyond = ly.lyapunov_beyond;
  }
  return out;
}

}  // namespace ergogame

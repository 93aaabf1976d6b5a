#include "ergogame/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ergogame/parallel.hpp"
#include "ergogame/rng.hpp"

namespace ergogame {
namespace {

// Fixed pairing tree over index order, so the result does not depend on how
// the terms were produced.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += v[k];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

std::size_t pick_index(const std::vector<double>& cum, double u) {
  const double x = u * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), x);
  return std::min<std::size_t>(it - cum.begin(), cum.size() - 1);
}

std::vector<double> cdf(const MixedAction& p) {
  std::vector<double> c(p.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) c[k] = acc += p[k];
  return c;
}

}  // namespace

const char* to_string(CostMode m) {
  return m == CostMode::expected ? "expected" : "realized";
}

Simulator::Simulator(const GameModel& model, const StationaryStrategy& pi1,
                     const StationaryStrategy& pi2, CostMode mode)
    : model_(model), mode_(mode), tables_(model.num_states()) {
  for (StateIndex i = 0; i < model.num_states(); ++i) {
    if (!pi1.defined_at(i) || !pi2.defined_at(i)) continue;
    StateTable& t = tables_[i];
    const MixedRow row = mix_row(model, i, pi1.dist[i], pi2.dist[i]);
    double acc = 0.0;
    for (const auto& e : row.jumps) {
      if (e.q <= 0.0) continue;
      acc += e.q;
      t.to.push_back(e.j);
      t.cum.push_back(acc);
    }
    // Without escape the total is the accumulated sum itself, so rounding in
    // the diagonal cannot fake an exit.
    t.rate = row.escape > 0.0 ? -row.diagonal : acc;
    t.cost = row.cost;
    t.cum_a = cdf(pi1.dist[i]);
    t.cum_b = cdf(pi2.dist[i]);
    t.defined = true;
  }
}

Trajectory Simulator::sample(StateIndex start, double horizon,
                             std::uint64_t seed, std::uint64_t index,
                             bool record) const {
  if (start >= tables_.size()) throw std::invalid_argument("bad start state");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const PathRng rng(seed, index);
  Trajectory t;
  t.horizon = horizon;
  StateIndex i = start;
  double now = 0.0;
  double prev_rate = 0.0;
  // Integral as c_0 T + sum_k (c_k - c_{k-1})(T - t_k): a constant cost rate
  // integrates to exactly c_0 T.
  double integral = 0.0;
  for (std::uint32_t k = 0;; ++k) {
    const StateTable& s = tables_[i];
    if (!s.defined) {
      std::ostringstream os;
      os << "strategy undefined at visited state " << i;
      throw std::invalid_argument(os.str());
    }
    const auto u = rng.uniforms(k, 0);
    int a = -1, b = -1;
    double rate = s.cost;
    if (mode_ == CostMode::realized) {
      const auto v = rng.uniforms(k, 1);
      a = static_cast<int>(pick_index(s.cum_a, v[0]));
      b = static_cast<int>(pick_index(s.cum_b, v[1]));
      rate = model_.pair(i, a, b).cost;
    }
    integral += (rate - prev_rate) * (horizon - now);
    prev_rate = rate;
    if (record) {
      t.times.push_back(now);
      t.states.push_back(i);
      t.action_a.push_back(a);
      t.action_b.push_back(b);
      t.cost_rates.push_back(rate);
    }
    if (!(s.rate > 0.0)) break;  // absorbing: accrues until the horizon
    const double hold = exponential(u[0], s.rate);
    if (now + hold >= horizon) break;
    now += hold;
    const double pick = u[1] * s.rate;
    const auto it = std::upper_bound(s.cum.begin(), s.cum.end(), pick);
    if (it == s.cum.end()) {
      t.exited = true;
      integral += (0.0 - prev_rate) * (horizon - now);
      break;
    }
    i = s.to[it - s.cum.begin()];
    ++t.jumps;
  }
  t.total_cost = integral;
  return t;
}

Trajectory sample_trajectory(const GameModel& model,
                             const StationaryStrategy& pi1,
                             const StationaryStrategy& pi2, StateIndex start,
                             double horizon, std::uint64_t seed,
                             std::uint64_t index, CostMode mode) {
  return Simulator(model, pi1, pi2, mode).sample(start, horizon, seed, index);
}

void write_trajectory_csv(std::ostream& out, const GameModel& model,
                          const Trajectory& t) {
  out << "t,state,a_label,b_label,cost_rate\n";
  char buf[64];
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const StateIndex i = t.states[k];
    std::snprintf(buf, sizeof buf, "%.17g", t.times[k]);
    out << buf << ',' << i << ',';
    out << (t.action_a[k] < 0 ? "mixed" : model.actions_a(i)[t.action_a[k]])
        << ',';
    out << (t.action_b[k] < 0 ? "mixed" : model.actions_b(i)[t.action_b[k]])
        << ',';
    std::snprintf(buf, sizeof buf, "%.17g", t.cost_rates[k]);
    out << buf << '\n';
  }
}

RiskSensitiveEstimate aggregate_J(const std::vector<double>& integrals,
                                  double horizon, std::uint64_t seed,
                                  std::size_t bootstrap) {
  const std::size_t n = integrals.size();
  if (n < 2) throw std::invalid_argument("need at least two paths");
  RiskSensitiveEstimate e;
  e.horizon = horizon;
  e.paths = n;
  e.seed = seed;
  e.bootstrap = bootstrap;
  const double top = *std::max_element(integrals.begin(), integrals.end());
  if (!std::isfinite(top)) throw std::runtime_error("non-finite cost integral");
  std::vector<double> w(n), w2(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = std::exp(integrals[k] - top);
    w2[k] = w[k] * w[k];
  }
  const double sum = pairwise_sum(w.data(), n);
  const double log_n = std::log(static_cast<double>(n));
  e.max_exponent = top;
  e.log_sum_exp = top + std::log(sum);
  e.j_hat = (top + (std::log(sum) - log_n)) / horizon;
  e.effective_sample_size = sum * sum / pairwise_sum(w2.data(), n);
  e.mean_cost_rate = pairwise_sum(integrals.data(), n) /
                     static_cast<double>(n) / horizon;

  if (bootstrap >= 2) {
    // Resampling draws come from streams disjoint from the path streams.
    std::vector<double> reps(bootstrap);
    std::vector<double> pick(n);
    for (std::size_t b = 0; b < bootstrap; ++b) {
      const PathRng rng(seed, (std::uint64_t{1} << 63) | b);
      for (std::size_t k = 0; k < n; k += 2) {
        const auto u = rng.uniforms(static_cast<std::uint32_t>(k / 2), 0);
        for (std::size_t r = 0; r < 2 && k + r < n; ++r) {
          const auto idx = std::min<std::size_t>(
              static_cast<std::size_t>(u[r] * static_cast<double>(n)), n - 1);
          pick[k + r] = w[idx];
        }
      }
      reps[b] = (top + (std::log(pairwise_sum(pick.data(), n)) - log_n)) /
                horizon;
    }
    // Shifted two-pass variance: identical replicates give exactly zero.
    double mean = 0.0;
    for (double r : reps) mean += r - reps[0];
    mean /= static_cast<double>(bootstrap);
    double var = 0.0;
    for (double r : reps) var += (r - reps[0] - mean) * (r - reps[0] - mean);
    e.bootstrap_se = std::sqrt(var / static_cast<double>(bootstrap - 1));
  }
  return e;
}

RiskSensitiveEstimate estimate_J(const GameModel& model,
                                 const StationaryStrategy& pi1,
                                 const StationaryStrategy& pi2,
                                 StateIndex start, double horizon,
                                 std::size_t paths, std::uint64_t seed,
                                 const EstimateOptions& options) {
  if (paths < 2) throw std::invalid_argument("need at least two paths");
  const Simulator sim(model, pi1, pi2, options.mode);
  std::vector<double> integrals(paths);
  std::vector<char> exited(paths, 0);
  parallel_for(paths, options.threads, [&](std::size_t k) {
    const Trajectory t = sim.sample(start, horizon, seed, k, false);
    integrals[k] = t.total_cost;
    exited[k] = t.exited ? 1 : 0;
  });
  RiskSensitiveEstimate e =
      aggregate_J(integrals, horizon, seed, options.bootstrap);
  e.start = start;
  e.mode = options.mode;
  e.exited = static_cast<std::size_t>(
      std::count(exited.begin(), exited.end(), char{1}));
  e.exit_fraction = static_cast<double>(e.exited) / static_cast<double>(paths);
  e.refused = e.exit_fraction > options.max_exit_fraction;
  return e;
}

HorizonProfile horizon_profile(const GameModel& model,
                               const StationaryStrategy& pi1,
                               const StationaryStrategy& pi2,
                               StateIndex start,
                               const std::vector<double>& horizons,
                               std::size_t paths, std::uint64_t seed,
                               const EstimateOptions& options) {
  if (horizons.size() < 2) {
    throw std::invalid_argument("profile needs at least two horizons");
  }
  HorizonProfile p;
  for (double t : horizons) {
    p.estimates.push_back(
        estimate_J(model, pi1, pi2, start, t, paths, seed, options));
  }
  const auto& e1 = p.estimates[p.estimates.size() - 2];
  const auto& e2 = p.estimates.back();
  p.slope = (e1.j_hat - e2.j_hat) / (1.0 / e1.horizon - 1.0 / e2.horizon);
  p.extrapolated = e2.j_hat - p.slope / e2.horizon;
  return p;
}

}  // namespace ergogame

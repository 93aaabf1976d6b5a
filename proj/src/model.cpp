#include "ergogame/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace ergogame {

double GameModel::max_exit_rate(StateIndex i) const {
  double q = 0.0;
  for (const auto& p : pairs(i)) q = std::max(q, -p.diagonal);
  return q;
}

double GameModel::max_cost(StateIndex i) const {
  double c = -INFINITY;
  for (const auto& p : pairs(i)) c = std::max(c, p.cost);
  return c;
}

bool GameModel::has_escape() const {
  return std::any_of(pairs_.begin(), pairs_.end(),
                     [](const ActionPairData& p) { return p.escape > 0.0; });
}

bool LyapunovData::in_drift_set(StateIndex i) const {
  return std::find(drift_set.begin(), drift_set.end(), i) != drift_set.end();
}

GameModelBuilder::GameModelBuilder(std::size_t num_states)
    : num_states_(num_states),
      actions_a_(num_states, std::vector<std::string>{"0"}),
      actions_b_(num_states, std::vector<std::string>{"0"}),
      pairs_(num_states, std::vector<PendingPair>(1)) {
  if (num_states == 0) throw ModelError("model needs at least one state");
}

GameModelBuilder& GameModelBuilder::name(std::string name) {
  name_ = std::move(name);
  return *this;
}

GameModelBuilder& GameModelBuilder::reference_state(StateIndex i0) {
  if (i0 >= num_states_) throw ModelError("reference state out of range");
  reference_state_ = i0;
  return *this;
}

GameModelBuilder& GameModelBuilder::conceptually_infinite(bool flag) {
  conceptually_infinite_ = flag;
  return *this;
}

GameModelBuilder& GameModelBuilder::actions(StateIndex i,
                                            std::vector<std::string> a_labels,
                                            std::vector<std::string> b_labels) {
  if (i >= num_states_) throw ModelError("state out of range in actions");
  if (a_labels.empty() || b_labels.empty()) {
    std::ostringstream os;
    os << "empty action set at state " << i;
    throw ModelError(os.str());
  }
  pairs_[i].assign(a_labels.size() * b_labels.size(), PendingPair{});
  actions_a_[i] = std::move(a_labels);
  actions_b_[i] = std::move(b_labels);
  return *this;
}

GameModelBuilder::PendingPair& GameModelBuilder::at(StateIndex i,
                                                    std::size_t a,
                                                    std::size_t b) {
  if (i >= num_states_ || a >= actions_a_[i].size() ||
      b >= actions_b_[i].size()) {
    std::ostringstream os;
    os << "action pair (" << i << "," << a << "," << b << ") out of range";
    throw ModelError(os.str());
  }
  return pairs_[i][a * actions_b_[i].size() + b];
}

GameModelBuilder& GameModelBuilder::rates(StateIndex i, std::size_t a,
                                          std::size_t b,
                                          const std::vector<RateEntry>& entries,
                                          double escape) {
  PendingPair& p = at(i, a, b);
  p.entries.clear();
  p.has_diagonal = false;
  p.diagonal = 0.0;
  for (const auto& e : entries) {
    if (e.j >= num_states_) {
      std::ostringstream os;
      os << "rate target " << e.j << " out of range at (" << i << "," << a
         << "," << b << ")";
      throw ModelError(os.str());
    }
    if (e.j == i) {
      p.has_diagonal = true;
      p.diagonal += e.q;
    } else {
      p.entries.push_back(e);
    }
  }
  p.escape = escape;
  return *this;
}

GameModelBuilder& GameModelBuilder::cost(StateIndex i, std::size_t a,
                                         std::size_t b, double c) {
  at(i, a, b).cost = c;
  return *this;
}

GameModel GameModelBuilder::build() const {
  GameModel m;
  m.name_ = name_;
  m.num_states_ = num_states_;
  m.reference_state_ = reference_state_;
  m.conceptually_infinite_ = conceptually_infinite_;
  m.actions_a_ = actions_a_;
  m.actions_b_ = actions_b_;
  m.offsets_.resize(num_states_);
  std::size_t offset = 0;
  for (StateIndex i = 0; i < num_states_; ++i) {
    m.offsets_[i] = offset;
    offset += pairs_[i].size();
  }
  m.pairs_.reserve(offset);
  for (StateIndex i = 0; i < num_states_; ++i) {
    for (const auto& pending : pairs_[i]) {
      ActionPairData d;
      d.jumps = pending.entries;
      std::stable_sort(d.jumps.begin(), d.jumps.end(),
                       [](const RateEntry& x, const RateEntry& y) {
                         return x.j < y.j;
                       });
      // Merge repeated targets.
      std::vector<RateEntry> merged;
      for (const auto& e : d.jumps) {
        if (!merged.empty() && merged.back().j == e.j) {
          merged.back().q += e.q;
        } else {
          merged.push_back(e);
        }
      }
      d.jumps = std::move(merged);
      d.escape = pending.escape;
      d.cost = pending.cost;
      if (pending.has_diagonal) {
        d.diagonal = pending.diagonal;
      } else {
        double sum = d.escape;
        for (const auto& e : d.jumps) sum += e.q;
        d.diagonal = -sum;
      }
      m.pairs_.push_back(std::move(d));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

std::string location(StateIndex i, std::size_t a, std::size_t b) {
  std::ostringstream os;
  os << "(" << i << "," << a << "," << b << ")";
  return os.str();
}

std::string location(StateIndex i, std::size_t a, std::size_t b,
                     StateIndex j) {
  std::ostringstream os;
  os << "(" << i << "," << a << "," << b << "," << j << ")";
  return os.str();
}

// States reachable from `start` along edges present under every action pair
// (forward) or reaching `start` along such edges (backward).
std::vector<bool> sure_reach(const GameModel& model, StateIndex start,
                             bool forward) {
  const std::size_t n = model.num_states();
  // edge i -> j present under every pair of state i
  std::vector<std::vector<StateIndex>> adj(n);
  for (StateIndex i = 0; i < n; ++i) {
    auto pairs = model.pairs(i);
    for (const auto& e : pairs.front().jumps) {
      if (!(e.q > 0.0)) continue;
      bool everywhere = true;
      for (const auto& p : pairs) {
        auto it = std::lower_bound(
            p.jumps.begin(), p.jumps.end(), e.j,
            [](const RateEntry& r, StateIndex j) { return r.j < j; });
        if (it == p.jumps.end() || it->j != e.j || !(it->q > 0.0)) {
          everywhere = false;
          break;
        }
      }
      if (!everywhere) continue;
      if (forward) {
        adj[i].push_back(e.j);
      } else {
        adj[e.j].push_back(i);
      }
    }
  }
  std::vector<bool> seen(n, false);
  std::deque<StateIndex> queue{start};
  seen[start] = true;
  while (!queue.empty()) {
    StateIndex u = queue.front();
    queue.pop_front();
    for (StateIndex v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        queue.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

ValidationReport validate_model(const GameModel& model, double tol) {
  ValidationReport report;
  auto add = [&](std::string kind, StateIndex i, std::size_t a, std::size_t b,
                 StateIndex j, std::string msg) {
    report.violations.push_back(
        Violation{std::move(kind), i, a, b, j, std::move(msg)});
  };
  const std::size_t n = model.num_states();
  if (n == 0) {
    add("empty", 0, 0, 0, 0, "model has no states");
    return report;
  }
  const StateIndex i0 = model.reference_state();
  if (i0 >= n) {
    add("reference", i0, 0, 0, 0, "reference state out of range");
    return report;
  }
  for (StateIndex i = 0; i < n; ++i) {
    const std::size_t na = model.num_actions_a(i);
    const std::size_t nb = model.num_actions_b(i);
    if (na == 0 || nb == 0) {
      add("empty action set", i, 0, 0, i,
          "empty action set at state " + std::to_string(i));
      continue;
    }
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t b = 0; b < nb; ++b) {
        const ActionPairData& p = model.pair(i, a, b);
        double sum = p.diagonal + p.escape;
        double magnitude = std::fabs(p.diagonal) + std::fabs(p.escape);
        bool finite = std::isfinite(p.diagonal) && std::isfinite(p.escape);
        for (const auto& e : p.jumps) {
          finite = finite && std::isfinite(e.q);
          if (e.q < 0.0) {
            add("negative off-diagonal", i, a, b, e.j,
                "negative off-diagonal at " + location(i, a, b, e.j));
          }
          sum += e.q;
          magnitude += std::fabs(e.q);
        }
        if (!finite) {
          add("unstable row", i, a, b, i,
              "non-finite rate at " + location(i, a, b));
          continue;
        }
        if (p.escape < 0.0) {
          add("negative escape", i, a, b, i,
              "negative escape rate at " + location(i, a, b));
        }
        if (p.escape > 0.0 && !model.conceptually_infinite()) {
          add("escape on finite model", i, a, b, i,
              "escape rate on a finite model at " + location(i, a, b));
        }
        if (std::fabs(sum) > tol * magnitude) {
          std::ostringstream os;
          os << "non-conservative row at " << location(i, a, b)
             << ": row sum " << sum;
          add("non-conservative row", i, a, b, i, os.str());
        }
        if (!std::isfinite(p.cost)) {
          add("non-finite cost", i, a, b, i,
              "non-finite cost at " + location(i, a, b));
        } else if (p.cost < 0.0) {
          add("negative cost", i, a, b, i,
              "negative cost at " + location(i, a, b));
        }
      }
    }
  }
  if (!report.ok()) return report;

  // Every stored state is reachable from i0 in one jump, under every pair.
  for (std::size_t a = 0; a < model.num_actions_a(i0); ++a) {
    for (std::size_t b = 0; b < model.num_actions_b(i0); ++b) {
      const ActionPairData& p = model.pair(i0, a, b);
      std::vector<bool> hit(n, false);
      for (const auto& e : p.jumps) hit[e.j] = e.q > 0.0;
      for (StateIndex j = 0; j < n; ++j) {
        if (j == i0 || hit[j]) continue;
        report.reachable_from_reference = false;
        add("unreachable from reference", i0, a, b, j,
            "no direct rate from the reference state at " +
                location(i0, a, b, j));
      }
    }
  }
  auto fwd = sure_reach(model, i0, true);
  auto bwd = sure_reach(model, i0, false);
  for (StateIndex j = 0; j < n; ++j) {
    if (fwd[j] && bwd[j]) continue;
    report.irreducible = false;
    add("reducible", j, 0, 0, j,
        "state " + std::to_string(j) +
            " is not strongly connected to the reference state under every "
            "stationary pair");
  }
  return report;
}

ValidationReport validate_lyapunov(const GameModel& model,
                                   const LyapunovData& lyap) {
  ValidationReport report;
  const std::size_t n = model.num_states();
  auto add = [&](std::string kind, StateIndex i, std::string msg) {
    report.violations.push_back(
        Violation{std::move(kind), i, 0, 0, i, std::move(msg)});
  };
  if (lyap.lyapunov.size() != n) add("size", 0, "V has wrong length");
  if (lyap.explosion_lyapunov.size() != n) {
    add("size", 0, "V_tilde has wrong length");
  }
  if (lyap.mode == DriftMode::unbounded_cost && lyap.drift_rate.size() != n) {
    add("size", 0, "lhat has wrong length");
  }
  if (!report.ok()) return report;
  for (StateIndex i = 0; i < n; ++i) {
    if (!(lyap.lyapunov[i] >= 1.0)) {
      add("V below one", i, "V(" + std::to_string(i) + ") < 1");
    }
    if (!(lyap.explosion_lyapunov[i] >= 1.0)) {
      add("V_tilde below one", i, "V_tilde(" + std::to_string(i) + ") < 1");
    }
  }
  if (!(lyap.drift_constant > 0.0)) add("C", 0, "C must be positive");
  for (StateIndex k : lyap.drift_set) {
    if (k >= n) add("K_hat", k, "K_hat state out of range");
  }
  if (lyap.mode == DriftMode::bounded_cost) {
    for (StateIndex i = 0; i < n; ++i) {
      if (!(lyap.uniform_drift_rate > model.max_cost(i))) {
        add("gamma_hat", i,
            "gamma_hat does not exceed max cost at state " +
                std::to_string(i));
      }
    }
  }
  return report;
}

DriftReport check_drift(const GameModel& model, const LyapunovData& lyap,
                        StateIndex first, StateIndex last) {
  DriftReport report;
  report.drift_constant = lyap.drift_constant;
  report.rate_bound = lyap.rate_bound;
  report.growth_slope = lyap.growth_slope;
  report.growth_offset = lyap.growth_offset;
  report.worst_drift_slack = -INFINITY;
  last = std::min<StateIndex>(last, model.num_states() - 1);
  const auto& V = lyap.lyapunov;
  const auto& Vt = lyap.explosion_lyapunov;

  for (StateIndex i = first; i <= last; ++i) {
    DriftStateReport s;
    s.i = i;
    s.drift_slack = -INFINITY;
    s.growth_slack = -INFINITY;
    const double rhs = (lyap.in_drift_set(i) ? lyap.drift_constant : 0.0) -
                       lyap.rate(i) * V[i];
    for (std::size_t a = 0; a < model.num_actions_a(i); ++a) {
      for (std::size_t b = 0; b < model.num_actions_b(i); ++b) {
        const ActionPairData& p = model.pair(i, a, b);
        double lhs = p.diagonal * V[i];
        double lhs_t = p.diagonal * Vt[i];
        for (const auto& e : p.jumps) {
          lhs += e.q * V[e.j];
          lhs_t += e.q * Vt[e.j];
        }
        if (p.escape > 0.0) {
          if (lyap.lyapunov_beyond.size() > i &&
              lyap.explosion_lyapunov_beyond.size() > i) {
            lhs += p.escape * lyap.lyapunov_beyond[i];
            lhs_t += p.escape * lyap.explosion_lyapunov_beyond[i];
          } else {
            s.verifiable = false;
          }
        }
        const double slack = lhs - rhs;
        if (slack > s.drift_slack) {
          s.drift_slack = slack;
          s.worst_a = a;
          s.worst_b = b;
        }
        s.growth_slack = std::max(
            s.growth_slack,
            lhs_t - lyap.growth_slope * Vt[i] - lyap.growth_offset);
      }
    }
    s.rate_slack = model.max_exit_rate(i) - lyap.rate_bound * Vt[i];
    if (!s.verifiable || s.drift_slack > 0.0 || s.growth_slack > 0.0 ||
        s.rate_slack > 0.0) {
      report.ok = false;
    }
    if (s.drift_slack > report.worst_drift_slack) {
      report.worst_drift_slack = s.drift_slack;
      report.worst_state = i;
    }
    report.states.push_back(s);
  }

  if (lyap.mode == DriftMode::unbounded_cost && last > first) {
    StateIndex threshold = last;
    auto proxy = [&](StateIndex i) {
      return lyap.drift_rate[i] - model.max_cost(i);
    };
    while (threshold > first && proxy(threshold - 1) <= proxy(threshold)) {
      --threshold;
    }
    report.norm_like_threshold = threshold;
    report.norm_like_proxy_ok = proxy(last) > proxy(threshold);
  } else {
    report.norm_like_threshold = first;
  }
  return report;
}

}  // namespace ergogame

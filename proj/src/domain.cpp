#include "ergogame/domain.hpp"

#include <algorithm>
#include <stdexcept>

namespace ergogame {

Domain::Domain(std::size_t num_states, std::vector<StateIndex> states)
    : states_(std::move(states)),
      member_(num_states, false),
      local_(num_states, 0) {
  std::sort(states_.begin(), states_.end());
  states_.erase(std::unique(states_.begin(), states_.end()), states_.end());
  for (std::size_t k = 0; k < states_.size(); ++k) {
    if (states_[k] >= num_states) {
      throw std::invalid_argument("domain state out of range");
    }
    member_[states_[k]] = true;
    local_[states_[k]] = k;
  }
}

Domain Domain::ball(const GameModel& model, std::size_t radius) {
  const std::size_t n = model.num_states();
  std::vector<StateIndex> s;
  for (StateIndex i = 0; i <= radius && i < n; ++i) s.push_back(i);
  s.push_back(model.reference_state());
  return Domain(n, std::move(s));
}

Domain Domain::all(const GameModel& model) {
  std::vector<StateIndex> s(model.num_states());
  for (StateIndex i = 0; i < s.size(); ++i) s[i] = i;
  return Domain(model.num_states(), std::move(s));
}

std::vector<StateIndex> Domain::leaky_states(const GameModel& model) const {
  std::vector<StateIndex> out;
  for (StateIndex i : states_) {
    bool leaks = false;
    for (const auto& p : model.pairs(i)) {
      if (p.escape > 0.0) leaks = true;
      for (const auto& e : p.jumps) {
        if (e.q > 0.0 && !contains(e.j)) leaks = true;
      }
      if (leaks) break;
    }
    if (leaks) out.push_back(i);
  }
  return out;
}

TruncationLadder TruncationLadder::balls(const GameModel& model,
                                         const std::vector<std::size_t>& radii) {
  if (radii.empty()) throw std::invalid_argument("ladder needs a radius");
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (radii[k] <= radii[k - 1]) {
      throw std::invalid_argument("ladder radii must be strictly increasing");
    }
  }
  if (radii.back() >= model.num_states()) {
    throw std::invalid_argument("ladder radius exceeds the stored states");
  }
  TruncationLadder ladder;
  ladder.radii = radii;
  for (std::size_t r : radii) ladder.domains.push_back(Domain::ball(model, r));
  return ladder;
}

bool TruncationLadder::exhausts(const GameModel& model) const {
  return !domains.empty() && domains.back().size() == model.num_states();
}

}  // namespace ergogame

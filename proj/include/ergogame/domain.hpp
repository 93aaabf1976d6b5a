#ifndef ERGOGAME_DOMAIN_HPP_
#define ERGOGAME_DOMAIN_HPP_

#include <cstddef>
#include <vector>

#include "ergogame/model.hpp"

namespace ergogame {

// Finite set of stored states, kept sorted.
class Domain {
 public:
  Domain() = default;
  Domain(std::size_t num_states, std::vector<StateIndex> states);

  // {0, ..., radius} together with the reference state.
  static Domain ball(const GameModel& model, std::size_t radius);
  static Domain all(const GameModel& model);

  const std::vector<StateIndex>& states() const { return states_; }
  std::size_t size() const { return states_.size(); }
  std::size_t num_states() const { return member_.size(); }
  bool contains(StateIndex i) const { return i < member_.size() && member_[i]; }
  // Position of i within states(); only valid when contains(i).
  std::size_t local(StateIndex i) const { return local_[i]; }
  bool covers_all() const { return states_.size() == member_.size(); }

  // States whose rows put mass outside the domain (or beyond the stored cap)
  // under some action pair.
  std::vector<StateIndex> leaky_states(const GameModel& model) const;

 private:
  std::vector<StateIndex> states_;
  std::vector<bool> member_;
  std::vector<std::size_t> local_;
};

struct TruncationLadder {
  std::vector<std::size_t> radii;
  std::vector<Domain> domains;

  // Nested balls; radii must be strictly increasing.
  static TruncationLadder balls(const GameModel& model,
                                const std::vector<std::size_t>& radii);
  bool exhausts(const GameModel& model) const;
};

}  // namespace ergogame

#endif  // ERGOGAME_DOMAIN_HPP_

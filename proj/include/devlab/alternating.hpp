#pragma once

#include <algorithm>
#include <cstddef>
#include <span>

#include "devlab/core.hpp"

namespace devlab {

/// Turn order for alternating play inside the simultaneous-move model:
/// player i is on turn in periods n with (n - 1) mod |I| == i.
struct TurnOrder {
  std::size_t num_players = 2;
  Action null_action = 0;

  bool on_turn(PlayerId player, std::size_t period) const noexcept {
    return (period - 1) % num_players == player.index;
  }
  PlayerId mover(std::size_t period) const noexcept {
    return PlayerId{(period - 1) % num_players};
  }
  /// 1-based count of the player's own moves up to and including `period`.
  std::size_t move_index(std::size_t period) const noexcept {
    return (period - 1) / num_players + 1;
  }
};

/// Base for strategies that act only on their own turn and otherwise put
/// point mass on the null action.
class AlternatingStrategy : public BehaviorStrategy {
 public:
  AlternatingStrategy(PlayerId owner, TurnOrder turns, std::size_t alphabet_size)
      : owner_(owner), turns_(turns), alphabet_size_(alphabet_size) {
    if (turns.null_action >= alphabet_size) throw InputError("null action outside alphabet");
    if (owner.index >= turns.num_players) throw InputError("owner outside turn order");
  }

  std::size_t alphabet_size() const override { return alphabet_size_; }

  bool active(std::size_t period) const override { return turns_.on_turn(owner_, period); }

  void distribution(PlayerId player, const History& history,
                    std::span<double> out) const final {
    const std::size_t period = history.length() + 1;
    if (player != owner_ || !active(period)) {
      std::fill(out.begin(), out.end(), 0.0);
      out[turns_.null_action] = 1.0;
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    on_turn(history, out);
  }

  PlayerId owner() const noexcept { return owner_; }
  const TurnOrder& turns() const noexcept { return turns_; }

 protected:
  /// Distribution on the owner's turn; `out` is zero-filled on entry.
  virtual void on_turn(const History& history, std::span<double> out) const = 0;

 private:
  PlayerId owner_;
  TurnOrder turns_;
  std::size_t alphabet_size_;
};

}  // namespace devlab

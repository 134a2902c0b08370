#pragma once

#include <memory>
#include <span>
#include <vector>

#include "devlab/devlab.hpp"

namespace devlab::testing {

/// Always-active strategy with a fixed distribution.
class FixedStrategy final : public BehaviorStrategy {
 public:
  explicit FixedStrategy(std::vector<double> dist) : dist_(std::move(dist)) {}
  std::size_t alphabet_size() const override { return dist_.size(); }
  void distribution(PlayerId, const History&, std::span<double> out) const override {
    std::copy(dist_.begin(), dist_.end(), out.begin());
  }

 private:
  std::vector<double> dist_;
};

inline StrategyPtr fair_bit() { return std::make_shared<FixedStrategy>(std::vector<double>{0.5, 0.5}); }
inline StrategyPtr always_bit(Action a) {
  std::vector<double> d(2, 0.0);
  d[a] = 1.0;
  return std::make_shared<FixedStrategy>(d);
}
inline StrategyPtr biased_bit(double p1) {
  return std::make_shared<FixedStrategy>(std::vector<double>{1.0 - p1, p1});
}

/// Alternating adjacent-ones history: bit n is written by A in odd periods
/// and by B in even periods; the idle player's coordinate is 0.
inline History adj_history(const std::vector<int>& bits) {
  History h(2);
  for (std::size_t n = 1; n <= bits.size(); ++n) {
    const auto b = static_cast<Action>(bits[n - 1]);
    if (n % 2 == 1) {
      h.push({b, Action{0}});
    } else {
      h.push({Action{0}, b});
    }
  }
  return h;
}

/// Random-walk history from interleaved ±1 moves.
inline History walk_history(const std::vector<int>& w) {
  History h(2);
  for (std::size_t n = 1; n <= w.size(); ++n) {
    const Action a = w[n - 1] > 0 ? rw::kUp : rw::kDown;
    if (n % 2 == 1) {
      h.push({a, rw::kNull});
    } else {
      h.push({rw::kNull, a});
    }
  }
  return h;
}

/// All histories of `length` periods over binary alphabets for every player.
inline std::vector<History> all_binary_histories(std::size_t players, std::size_t length) {
  std::vector<History> out;
  const std::size_t bits = players * length;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
    History h(players);
    std::vector<Action> prof(players);
    for (std::size_t n = 0; n < length; ++n) {
      for (std::size_t i = 0; i < players; ++i) prof[i] = static_cast<Action>((code >> (n * players + i)) & 1U);
      h.push(prof);
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace devlab::testing

#pragma once

// One-shot game: each of two players writes a single bit in period 1,
// supposed to be 1 with probability mu. The outcome is bad iff both bits are 1.

#include <memory>
#include <span>

#include "devlab/core.hpp"
#include "devlab/errors.hpp"

namespace devlab {

class SingleBitStrategy final : public BehaviorStrategy {
 public:
  explicit SingleBitStrategy(double mu) : mu_(mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw InputError("single-bit: mu must lie in [0, 1]");
  }
  std::size_t alphabet_size() const override { return 2; }
  bool active(std::size_t period) const override { return period == 1; }
  void distribution(PlayerId, const History& history, std::span<double> out) const override {
    if (history.length() == 0) {
      out[1] = mu_;
      out[0] = 1.0 - mu_;
    } else {
      out[0] = 1.0;
      out[1] = 0.0;
    }
  }

 private:
  double mu_;
};

class SingleBitDetector final : public PrefixDetector {
 public:
  std::unique_ptr<DetectorCursor> start() const override { return std::make_unique<Cursor>(); }

 private:
  class Cursor final : public DetectorCursor {
   public:
    Classification advance(const History& history) override {
      if (history.length() != 1) return Classification::Undetermined;
      const auto p = history.profile(1);
      return (p[0] == 1 && p[1] == 1) ? Classification::RejectedHere
                                      : Classification::AcceptedHere;
    }
    std::unique_ptr<DetectorCursor> clone() const override {
      return std::make_unique<Cursor>(*this);
    }
  };
};

inline GoalSpec single_bit_goal(double mu) {
  auto s = std::make_shared<SingleBitStrategy>(mu);
  return GoalSpec{"single_bit", ActionSpace({{"0", "1"}, {"0", "1"}}), StrategyProfile({s, s}),
                  std::make_shared<SingleBitDetector>(), OpenSide::Rejection};
}

}  // namespace devlab

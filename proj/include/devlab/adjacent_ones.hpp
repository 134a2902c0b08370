#pragma once

// Adjacent-ones goal. Player A (index 0) writes the odd bits, player B
// (index 1) the even bits; in period n the mover is supposed to write 1 with
// probability mu/n. A realization is bad as soon as an odd period 2k+1 and
// the following period 2k+2 both carry a 1.

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "devlab/alternating.hpp"
#include "devlab/core.hpp"
#include "devlab/errors.hpp"
#include "devlab/numeric.hpp"

namespace devlab {

inline constexpr PlayerId kPlayerA{0};
inline constexpr PlayerId kPlayerB{1};

struct AdjacentOnesParams {
  double mu = 0.1;
  std::size_t horizon = 1;

  void validate() const {
    if (!(mu > 0.0 && mu <= 1.0)) throw InputError("adjacent-ones: mu must lie in (0, 1]");
    if (horizon < 1) throw InputError("adjacent-ones: horizon must be >= 1");
  }
};

namespace adj {
inline constexpr Action kZero = 0;
inline constexpr Action kOne = 1;
inline constexpr TurnOrder kTurns{2, kZero};
}  // namespace adj

inline ActionSpace adj_action_space() { return ActionSpace({{"0", "1"}, {"0", "1"}}); }

/// Honest mover: 1 with probability mu/n in its own periods, 0 off-turn.
class AdjHonestStrategy final : public AlternatingStrategy {
 public:
  AdjHonestStrategy(PlayerId owner, double mu) : AlternatingStrategy(owner, adj::kTurns, 2), mu_(mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw InputError("adjacent-ones: mu must lie in [0, 1]");
  }

  double mu() const noexcept { return mu_; }

 protected:
  void on_turn(const History& history, std::span<double> out) const override {
    const double p = mu_ / static_cast<double>(history.length() + 1);
    out[adj::kOne] = p;
    out[adj::kZero] = 1.0 - p;
  }

 private:
  double mu_;
};

inline StrategyPtr adj_honest_strategy(const AdjacentOnesParams& params, PlayerId player) {
  params.validate();
  if (player.index > 1) throw InputError("adjacent-ones: two players only");
  return std::make_shared<AdjHonestStrategy>(player, params.mu);
}

inline StrategyProfile adj_honest_profile(double mu) {
  const AdjacentOnesParams params{mu, 1};
  return StrategyProfile({adj_honest_strategy(params, kPlayerA), adj_honest_strategy(params, kPlayerB)});
}

/// Bit written in `period`: the mover's action (the off-turn entry is ignored).
inline int adj_bit(const History& history, std::size_t period) {
  return history.action(period, adj::kTurns.mover(period)) == adj::kOne ? 1 : 0;
}

inline std::vector<int> adj_bits(const History& history) {
  std::vector<int> bits(history.length());
  for (std::size_t n = 1; n <= history.length(); ++n) bits[n - 1] = adj_bit(history, n);
  return bits;
}

/// Fires RejectedHere at the first even period 2k+2 with s_{2k+1} = s_{2k+2} = 1.
class AdjacentOnesDetector final : public PrefixDetector {
 public:
  std::unique_ptr<DetectorCursor> start() const override { return std::make_unique<Cursor>(); }

  static Classification classify_bits(std::span<const int> bits) {
    for (std::size_t n = 2; n <= bits.size(); n += 2) {
      if (bits[n - 2] == 1 && bits[n - 1] == 1) {
        return n == bits.size() ? Classification::RejectedHere : Classification::Undetermined;
      }
    }
    return Classification::Undetermined;
  }

 private:
  class Cursor final : public DetectorCursor {
   public:
    Classification advance(const History& history) override {
      const std::size_t n = history.length();
      const int bit = adj_bit(history, n);
      if (n % 2 == 1) {
        odd_bit_ = bit;
        return Classification::Undetermined;
      }
      return (odd_bit_ == 1 && bit == 1) ? Classification::RejectedHere
                                         : Classification::Undetermined;
    }
    std::unique_ptr<DetectorCursor> clone() const override {
      return std::make_unique<Cursor>(*this);
    }

   private:
    int odd_bit_ = 0;
  };
};

inline GoalSpec adjacent_ones_goal(double mu) {
  AdjacentOnesParams{mu, 1}.validate();
  return GoalSpec{"adjacent_ones", adj_action_space(), adj_honest_profile(mu),
                  std::make_shared<AdjacentOnesDetector>(), OpenSide::Rejection};
}

/// Σ μ/(2k+2) over odd periods 2k+1 <= up_to with s_{2k+1} = 1.
inline double adj_weighted_sum(const History& history, double mu, std::size_t up_to) {
  up_to = std::min(up_to, history.length());
  double weights = 0.0;
  for (std::size_t period = 1; period <= up_to; period += 2) {
    if (adj_bit(history, period) == 1) weights += 1.0 / static_cast<double>(period + 1);
  }
  return mu * weights;
}

inline double adj_weighted_sum(const History& history, double mu) {
  return adj_weighted_sum(history, mu, history.length());
}

namespace detail {
inline PlayerId adj_threshold_rule(double weighted_sum, double mu) {
  return weighted_sum > mu ? kPlayerA : kPlayerB;
}
}  // namespace detail

/// Threshold blame on a minimal rejecting prefix: A iff the weighted sum of
/// A's ones within the prefix exceeds mu.
inline PlayerId adj_blame(const History& rejected_prefix, double mu) {
  if (rejected_prefix.length() == 0 ||
      AdjacentOnesDetector::classify_bits(adj_bits(rejected_prefix)) !=
          Classification::RejectedHere) {
    throw ContractError("adj_blame: prefix is not a minimal rejecting prefix");
  }
  return detail::adj_threshold_rule(adj_weighted_sum(rejected_prefix, mu), mu);
}

/// Threshold blame using every odd period of a path simulated past its
/// rejection point (the statistic the rule is stated for on infinite paths).
inline PlayerId adj_blame_full(const History& history, double mu) {
  if (!AdjacentOnesDetector().first_firing(history)) {
    throw ContractError("adj_blame_full: path contains no rejection");
  }
  return detail::adj_threshold_rule(adj_weighted_sum(history, mu), mu);
}

/// Per-step miss hazard μ²/((2k+1)(2k+2)).
inline double adj_hazard(double mu, std::size_t k) {
  const double a = 2.0 * static_cast<double>(k) + 1.0;
  return mu * mu / (a * (a + 1.0));
}

/// Σ_{k<K} (Π_{i<k} (1 - h_i)) h_k: probability of rejection by period 2K.
inline double adj_miss_partial(double mu, std::size_t terms) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw InputError("adj_miss_partial: mu must lie in [0, 1]");
  KahanSum sum;
  double survive = 1.0;
  for (std::size_t k = 0; k < terms; ++k) {
    const double h = adj_hazard(mu, k);
    sum += survive * h;
    survive *= 1.0 - h;
  }
  return sum.value();
}

/// Σ_{k>=K} 1/((2k+1)(2k+2)) = (ψ(K+1) - ψ(K+1/2)) / 2.
inline double adj_hazard_tail(std::size_t first_term) {
  const double k = static_cast<double>(first_term);
  return 0.5 * (boost::math::digamma(k + 1.0) - boost::math::digamma(k + 0.5));
}

struct MissProbability {
  double value = 0.0;
  /// Half-width of the interval known to contain the exact series value.
  double error_bound = 0.0;
  std::size_t terms = 0;
};

/// Full miss probability ε(μ). Terms are summed until the unsummed remainder,
/// which lies in [S·T·(1-T), S·T] for survival S and hazard tail T, is pinned
/// to within `tolerance`; the midpoint of that bracket is added back.
inline MissProbability adj_miss_probability_detail(double mu, double tolerance) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw InputError("adj_miss_probability: mu must lie in [0, 1]");
  if (!(tolerance > 0.0)) throw InputError("adj_miss_probability: tolerance must be positive");
  if (mu == 0.0) return {};
  KahanSum sum;
  double survive = 1.0;
  std::size_t k = 0;
  for (;; ++k) {
    const double tail = mu * mu * adj_hazard_tail(k);
    const double width = survive * tail * tail;
    if (width < tolerance) {
      sum += survive * tail * (1.0 - tail / 2.0);
      return {sum.value(), width / 2.0, k};
    }
    const double h = adj_hazard(mu, k);
    sum += survive * h;
    survive *= 1.0 - h;
  }
}

inline double adj_miss_probability(double mu, double tolerance) {
  return adj_miss_probability_detail(mu, tolerance).value;
}

}  // namespace devlab

#pragma once

// Random-walk goal. Player A moves in odd periods, player B in even periods,
// each supposed to step ±1 with a fair coin; the walk starts at `start` and
// the target is reaching the origin. Paths that avoid the origin up to the
// horizon are blamed by a four-step rule whose limit tests are replaced by
// running statistics compared against calibrated thresholds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "devlab/alternating.hpp"
#include "devlab/core.hpp"
#include "devlab/errors.hpp"
#include "devlab/rng.hpp"

namespace devlab {

namespace rw {
inline constexpr Action kNull = 0;
inline constexpr Action kDown = 1;
inline constexpr Action kUp = 2;
inline constexpr TurnOrder kTurns{2, kNull};
inline constexpr std::int64_t kDefaultStart = 10;
inline constexpr std::size_t kDefaultBurnIn = 100;
}  // namespace rw

inline ActionSpace rw_action_space() {
  return ActionSpace({{"0", "-1", "+1"}, {"0", "-1", "+1"}});
}

struct SurrogateThresholds {
  double theta1 = std::numeric_limits<double>::infinity();
  double theta2 = std::numeric_limits<double>::infinity();
  double theta3 = std::numeric_limits<double>::infinity();
  std::size_t n0 = rw::kDefaultBurnIn;

  void validate() const {
    if (n0 < 3) throw InputError("surrogate thresholds: n0 must be >= 3");
    if (!(theta1 > 0.0) || !(theta2 > 0.0)) {
      throw InputError("surrogate thresholds: theta1 and theta2 must be positive");
    }
    if (std::isnan(theta3)) throw InputError("surrogate thresholds: theta3 is NaN");
  }
  bool operator==(const SurrogateThresholds&) const = default;
};

struct WalkParams {
  std::int64_t start = rw::kDefaultStart;
  std::size_t horizon = 100000;
  SurrogateThresholds thresholds;

  void validate() const {
    if (start < 1) throw InputError("random walk: start must be >= 1");
    if (horizon < 2 || horizon % 2 != 0) {
      throw InputError("random walk: horizon must be a positive even number");
    }
    thresholds.validate();
  }
};

/// Rule for one walk player's move, as a function of the current position and
/// the 1-based index of the player's own move.
class WalkMoveRule {
 public:
  virtual ~WalkMoveRule() = default;
  virtual double up_probability(std::int64_t position, std::size_t move_index) const = 0;
  /// True for the prescribed fair coin; lets the simulator draw one bit per move.
  virtual bool is_fair_coin() const { return false; }
};

class FairCoinRule final : public WalkMoveRule {
 public:
  double up_probability(std::int64_t, std::size_t) const override { return 0.5; }
  bool is_fair_coin() const override { return true; }
};

using WalkRulePtr = std::shared_ptr<const WalkMoveRule>;

inline std::int64_t rw_step(const History& history, std::size_t period) {
  const Action a = history.action(period, rw::kTurns.mover(period));
  if (a == rw::kUp) return 1;
  if (a == rw::kDown) return -1;
  throw InputError("random walk: mover played the null action in period " + std::to_string(period));
}

inline std::int64_t rw_position(const History& history, std::int64_t start) {
  std::int64_t s = start;
  for (std::size_t n = 1; n <= history.length(); ++n) s += rw_step(history, n);
  return s;
}

/// Behavior strategy view of a position-based move rule.
class WalkStrategy final : public AlternatingStrategy {
 public:
  WalkStrategy(PlayerId owner, WalkRulePtr rule, std::int64_t start)
      : AlternatingStrategy(owner, rw::kTurns, 3), rule_(std::move(rule)), start_(start) {
    if (!rule_) throw InputError("WalkStrategy: null rule");
  }

  const WalkRulePtr& rule() const noexcept { return rule_; }
  std::int64_t start() const noexcept { return start_; }

 protected:
  void on_turn(const History& history, std::span<double> out) const override {
    const std::size_t period = history.length() + 1;
    const double p = rule_->up_probability(rw_position(history, start_), turns().move_index(period));
    out[rw::kUp] = p;
    out[rw::kDown] = 1.0 - p;
  }

 private:
  WalkRulePtr rule_;
  std::int64_t start_;
};

inline StrategyPtr rw_honest_strategy(PlayerId player, std::int64_t start = rw::kDefaultStart) {
  return std::make_shared<WalkStrategy>(player, std::make_shared<FairCoinRule>(), start);
}

inline StrategyProfile rw_honest_profile(std::int64_t start = rw::kDefaultStart) {
  return StrategyProfile({rw_honest_strategy(PlayerId{0}, start), rw_honest_strategy(PlayerId{1}, start)});
}

/// AcceptedHere at the first period where the walk sits at the origin.
class RandomWalkDetector final : public PrefixDetector {
 public:
  explicit RandomWalkDetector(std::int64_t start) : start_(start) {}

  std::unique_ptr<DetectorCursor> start() const override {
    return std::make_unique<Cursor>(start_);
  }

 private:
  class Cursor final : public DetectorCursor {
   public:
    explicit Cursor(std::int64_t s) : position_(s) {}
    Classification advance(const History& history) override {
      position_ += rw_step(history, history.length());
      return position_ == 0 ? Classification::AcceptedHere : Classification::Undetermined;
    }
    std::unique_ptr<DetectorCursor> clone() const override {
      return std::make_unique<Cursor>(*this);
    }

   private:
    std::int64_t position_;
  };

  std::int64_t start_;
};

inline GoalSpec random_walk_goal(std::int64_t start = rw::kDefaultStart) {
  if (start < 1) throw InputError("random walk: start must be >= 1");
  return GoalSpec{"random_walk", rw_action_space(), rw_honest_profile(start),
                  std::make_shared<RandomWalkDetector>(start), OpenSide::Acceptance};
}

/// Moves a_1, b_1, a_2, b_2, ... of a walk, with derived partial sums and
/// positions s_0 = start, s_{2n-1} = start + A_n + B_{n-1}, s_{2n} = start + A_n + B_n.
class WalkTrace {
 public:
  WalkTrace(std::int64_t start, std::vector<std::int8_t> a_moves, std::vector<std::int8_t> b_moves)
      : start_(start), a_(std::move(a_moves)), b_(std::move(b_moves)) {
    if (!(a_.size() == b_.size() || a_.size() == b_.size() + 1)) {
      throw InputError("WalkTrace: A must have as many moves as B, or one more");
    }
    for (auto m : a_) check_move(m);
    for (auto m : b_) check_move(m);
  }

  /// From interleaved moves w = (a_1, b_1, a_2, ...).
  static WalkTrace from_interleaved(std::int64_t start, std::span<const std::int8_t> w) {
    std::vector<std::int8_t> a, b;
    a.reserve(w.size() / 2 + 1);
    b.reserve(w.size() / 2);
    for (std::size_t i = 0; i < w.size(); ++i) (i % 2 == 0 ? a : b).push_back(w[i]);
    return WalkTrace(start, std::move(a), std::move(b));
  }

  static WalkTrace from_history(const History& history, std::int64_t start) {
    std::vector<std::int8_t> w(history.length());
    for (std::size_t n = 1; n <= history.length(); ++n) {
      w[n - 1] = static_cast<std::int8_t>(rw_step(history, n));
    }
    return from_interleaved(start, w);
  }

  std::int64_t start() const noexcept { return start_; }
  std::size_t length() const noexcept { return a_.size() + b_.size(); }
  std::span<const std::int8_t> a_moves() const noexcept { return a_; }
  std::span<const std::int8_t> b_moves() const noexcept { return b_; }
  std::span<const std::int8_t> moves(PlayerId p) const { return p.index == 0 ? a_moves() : b_moves(); }

  std::vector<std::int8_t> interleaved() const {
    std::vector<std::int8_t> w(length());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = i % 2 == 0 ? a_[i / 2] : b_[i / 2];
    return w;
  }

  /// Partial sums X_0 = 0, X_n = x_1 + ... + x_n of one player's moves.
  static std::vector<std::int64_t> partial_sums(std::span<const std::int8_t> moves) {
    std::vector<std::int64_t> out(moves.size() + 1, 0);
    for (std::size_t n = 1; n <= moves.size(); ++n) out[n] = out[n - 1] + moves[n - 1];
    return out;
  }

  /// Positions s_0 .. s_N.
  std::vector<std::int64_t> positions() const {
    std::vector<std::int64_t> s(length() + 1);
    s[0] = start_;
    for (std::size_t n = 1; n <= length(); ++n) {
      s[n] = s[n - 1] + (n % 2 == 1 ? a_[(n - 1) / 2] : b_[(n - 1) / 2]);
    }
    return s;
  }

  bool reaches_origin() const {
    const auto s = positions();
    return std::any_of(s.begin(), s.end(), [](std::int64_t x) { return x <= 0; });
  }

 private:
  static void check_move(std::int8_t m) {
    if (m != 1 && m != -1) throw InputError("WalkTrace: moves must be +1 or -1");
  }

  std::int64_t start_;
  std::vector<std::int8_t> a_;
  std::vector<std::int8_t> b_;
};

/// Precomputed weights for the blame statistics, indexed by n.
struct WalkWeights {
  std::vector<double> lil;       ///< 1 / (sqrt(n) log log n), n >= 3
  std::vector<double> series;    ///< 1 / (sqrt(m) (log m)^{3/4}), m >= 2
  std::vector<double> odd;       ///< 1 / (2n log 2n), n >= 1
  std::vector<double> even;      ///< 1 / ((2n-1) log(2n-1)), n >= 2

  explicit WalkWeights(std::size_t max_index)
      : lil(max_index + 1, 0.0), series(max_index + 1, 0.0), odd(max_index + 1, 0.0),
        even(max_index + 1, 0.0) {
    for (std::size_t i = 1; i <= max_index; ++i) {
      const double n = static_cast<double>(i);
      if (i >= 3) lil[i] = 1.0 / (std::sqrt(n) * std::log(std::log(n)));
      if (i >= 2) series[i] = 1.0 / (std::sqrt(n) * std::pow(std::log(n), 0.75));
      odd[i] = 1.0 / (2.0 * n * std::log(2.0 * n));
      if (i >= 2) even[i] = 1.0 / ((2.0 * n - 1.0) * std::log(2.0 * n - 1.0));
    }
  }

  std::size_t max_index() const noexcept { return lil.size() - 1; }
};

/// Shared weight tables covering at least `max_index`.
inline std::shared_ptr<const WalkWeights> walk_weights(std::size_t max_index) {
  static std::mutex mutex;
  static std::shared_ptr<const WalkWeights> cached;
  std::lock_guard lock(mutex);
  if (!cached || cached->max_index() < max_index) {
    cached = std::make_shared<const WalkWeights>(std::max<std::size_t>(max_index, 1024));
  }
  return cached;
}

namespace detail {

inline void check_burn_in(std::size_t length, std::size_t n0) {
  if (n0 < 3) throw InputError("walk statistic: n0 must be >= 3");
  if (length < n0) throw InputError("walk statistic: fewer moves than the burn-in n0");
}

/// Strided view over one player's moves inside an interleaved move buffer.
struct PlayerMoves {
  const std::int8_t* data;
  std::size_t count;
  std::size_t stride;
  std::int8_t operator[](std::size_t i) const noexcept { return data[i * stride]; }
};

inline double step1(PlayerMoves x, std::size_t n0, const WalkWeights& w) {
  std::int64_t sum = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= x.count; ++n) {
    sum += x[n - 1];
    if (n >= n0) best = std::max(best, static_cast<double>(sum) * w.lil[n]);
  }
  return best;
}

inline double step2(PlayerMoves x, std::size_t n0, const WalkWeights& w) {
  double sum = 0.0;
  double best = 0.0;
  for (std::size_t m = 2; m <= x.count; ++m) {
    sum += static_cast<double>(x[m - 1]) * w.series[m];
    if (m >= n0) best = std::max(best, std::abs(sum));
  }
  return best;
}

}  // namespace detail

/// max_{n0 <= n <= N} X_n / (sqrt(n) log log n) for one player's moves.
inline double rw_step1_stat(std::span<const std::int8_t> moves, std::size_t n0) {
  detail::check_burn_in(moves.size(), n0);
  const auto w = walk_weights(moves.size());
  return detail::step1({moves.data(), moves.size(), 1}, n0, *w);
}

/// max_{n0 <= n <= N} |Σ_{m=2}^{n} x_m / (sqrt(m) (log m)^{3/4})|.
inline double rw_step2_stat(std::span<const std::int8_t> moves, std::size_t n0) {
  detail::check_burn_in(moves.size(), n0);
  const auto w = walk_weights(moves.size());
  return detail::step2({moves.data(), moves.size(), 1}, n0, *w);
}

struct Step3Stats {
  double t_odd = 0.0;   ///< Σ (s_{2n+1}² - s_{2n}²) / (2n log 2n), over A's moves
  double t_even = 0.0;  ///< Σ (s_{2n}² - s_{2n-1}²) / ((2n-1) log(2n-1)), over B's moves
};

namespace detail {

inline Step3Stats step3(std::int64_t start, std::span<const std::int8_t> w, const WalkWeights& wt) {
  const std::size_t N = w.size();
  const std::size_t half = N / 2;
  Step3Stats t;
  std::int64_t s = start;
  std::int64_t prev_sq = s * s;
  for (std::size_t n = 1; n <= N; ++n) {
    s += w[n - 1];
    const std::int64_t sq = s * s;
    const double diff = static_cast<double>(sq - prev_sq);
    if (n % 2 == 1) {
      // s_n² - s_{n-1}² with n = 2m+1, m >= 1, m <= half - 1
      const std::size_t m = (n - 1) / 2;
      if (m >= 1 && m + 1 <= half) t.t_odd += diff * wt.odd[m];
    } else {
      const std::size_t m = n / 2;
      if (m >= 2) t.t_even += diff * wt.even[m];
    }
    prev_sq = sq;
  }
  return t;
}

}  // namespace detail

inline Step3Stats rw_step3_stats(const WalkTrace& trace) {
  if (trace.length() < 4) throw InputError("rw_step3_stats: trace needs at least 4 moves");
  const auto w = trace.interleaved();
  const auto wt = walk_weights(trace.length() / 2 + 1);
  return detail::step3(trace.start(), w, *wt);
}

struct WalkStatistics {
  std::array<double, 2> step1{};
  std::array<double, 2> step2{};
  Step3Stats step3;
};

/// All blame statistics of an interleaved move sequence in one pass per step.
inline WalkStatistics compute_walk_statistics(std::int64_t start, std::span<const std::int8_t> w,
                                              std::size_t n0, const WalkWeights& weights) {
  const std::size_t na = (w.size() + 1) / 2;
  const std::size_t nb = w.size() / 2;
  detail::check_burn_in(std::min(na, nb), n0);
  if (weights.max_index() < na) throw InputError("walk weights too short for trace");
  const detail::PlayerMoves a{w.data(), na, 2};
  const detail::PlayerMoves b{w.data() + 1, nb, 2};
  WalkStatistics st;
  st.step1 = {detail::step1(a, n0, weights), detail::step1(b, n0, weights)};
  st.step2 = {detail::step2(a, n0, weights), detail::step2(b, n0, weights)};
  st.step3 = detail::step3(start, w, weights);
  return st;
}

struct StepDiagnostics {
  WalkStatistics stats;
  int decided_at_step = 4;
  PlayerId blamed{0};
};

/// Applies the four steps in order: Step 1 (A then B), Step 2 (A then B),
/// Step 3 (B on the odd-indexed sum, then A on the even-indexed sum), Step 4 A.
inline StepDiagnostics decide_walk_blame(const WalkStatistics& st, const SurrogateThresholds& th) {
  StepDiagnostics d{st, 4, PlayerId{0}};
  const auto decide = [&](int step, std::size_t player) {
    d.decided_at_step = step;
    d.blamed = PlayerId{player};
    return d;
  };
  if (st.step1[0] > th.theta1) return decide(1, 0);
  if (st.step1[1] > th.theta1) return decide(1, 1);
  if (st.step2[0] > th.theta2) return decide(2, 0);
  if (st.step2[1] > th.theta2) return decide(2, 1);
  if (st.step3.t_odd > th.theta3) return decide(3, 1);
  if (st.step3.t_even > th.theta3) return decide(3, 0);
  return d;
}

inline StepDiagnostics rw_blame(const WalkTrace& trace, const SurrogateThresholds& thresholds) {
  thresholds.validate();
  if (trace.reaches_origin()) throw ContractError("rw_blame: the walk reached the origin");
  const auto w = trace.interleaved();
  const auto weights = walk_weights(trace.length() / 2 + 1);
  return decide_walk_blame(compute_walk_statistics(trace.start(), w, thresholds.n0, *weights),
                           thresholds);
}

struct WalkRun {
  /// Period at which the origin was first reached; 0 if it was not reached.
  std::size_t hit_period = 0;
  std::size_t length = 0;
  bool reached() const noexcept { return hit_period != 0; }
};

/// Samples a walk directly from move rules, writing the interleaved moves to
/// `moves` (size >= horizon). With StopRule::AtDetection the walk stops when
/// it reaches the origin.
inline WalkRun simulate_walk(std::int64_t start, const WalkMoveRule& rule_a,
                             const WalkMoveRule& rule_b, std::size_t horizon, CounterRng& rng,
                             std::span<std::int8_t> moves, StopRule stop = StopRule::AtDetection) {
  if (moves.size() < horizon) throw InputError("simulate_walk: move buffer too small");
  WalkRun run;
  std::int64_t s = start;
  std::uint64_t bits = 0;
  int bits_left = 0;
  const bool fair_a = rule_a.is_fair_coin();
  const bool fair_b = rule_b.is_fair_coin();

  if (fair_a && fair_b && stop == StopRule::AtDetection) {
    for (std::size_t n = 1; n <= horizon; ++n) {
      if (bits_left == 0) {
        bits = rng();
        bits_left = 64;
      }
      const std::int8_t m = (bits & 1U) ? 1 : -1;
      bits >>= 1;
      --bits_left;
      moves[n - 1] = m;
      s += m;
      if (s == 0) return {n, n};
    }
    return {0, horizon};
  }

  for (std::size_t n = 1; n <= horizon; ++n) {
    const bool is_a = n % 2 == 1;
    const WalkMoveRule& rule = is_a ? rule_a : rule_b;
    bool up;
    if (is_a ? fair_a : fair_b) {
      if (bits_left == 0) {
        bits = rng();
        bits_left = 64;
      }
      up = bits & 1U;
      bits >>= 1;
      --bits_left;
    } else {
      const double p = rule.up_probability(s, (n + 1) / 2);
      if (p >= 1.0) {
        up = true;
      } else if (p <= 0.0) {
        up = false;
      } else {
        up = rng.uniform() < p;
      }
    }
    const std::int8_t m = up ? 1 : -1;
    moves[n - 1] = m;
    s += m;
    if (s == 0 && run.hit_period == 0) {
      run.hit_period = n;
      if (stop == StopRule::AtDetection) {
        run.length = n;
        return run;
      }
    }
  }
  run.length = horizon;
  return run;
}

}  // namespace devlab

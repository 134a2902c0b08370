#pragma once

// Players, actions, histories, behavior strategies, goals, and episode
// simulation. Moves are simultaneous; alternating play is expressed by a
// strategy that is inactive in off-turn periods and puts point mass on its
// designated null action there.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "devlab/errors.hpp"
#include "devlab/rng.hpp"

namespace devlab {

using Action = std::uint16_t;

/// Probabilities returned by strategies must sum to one within this tolerance.
inline constexpr double kProbabilityTolerance = 1e-12;

struct PlayerId {
  std::size_t index = 0;
  auto operator<=>(const PlayerId&) const = default;
};

class ActionSpace {
 public:
  explicit ActionSpace(std::vector<std::vector<std::string>> alphabets)
      : alphabets_(std::move(alphabets)) {
    if (alphabets_.size() < 2) throw InputError("ActionSpace: at least two players required");
    for (const auto& a : alphabets_) {
      if (a.empty()) throw InputError("ActionSpace: empty action alphabet");
      if (a.size() > 0xFFFF) throw InputError("ActionSpace: alphabet too large");
    }
  }

  std::size_t num_players() const noexcept { return alphabets_.size(); }

  const std::vector<std::string>& alphabet(PlayerId p) const { return alphabets_.at(p.index); }
  std::size_t alphabet_size(PlayerId p) const { return alphabet(p).size(); }

  std::optional<Action> find(PlayerId p, std::string_view label) const {
    const auto& a = alphabet(p);
    const auto it = std::find(a.begin(), a.end(), label);
    if (it == a.end()) return std::nullopt;
    return static_cast<Action>(it - a.begin());
  }

  Action action(PlayerId p, std::string_view label) const {
    if (auto a = find(p, label)) return *a;
    throw InputError("unknown action label '" + std::string(label) + "' for player " +
                     std::to_string(p.index));
  }

  bool operator==(const ActionSpace&) const = default;

 private:
  std::vector<std::vector<std::string>> alphabets_;
};

/// A finite sequence of action profiles. Periods are numbered from 1.
class History {
 public:
  explicit History(std::size_t num_players) : num_players_(num_players) {
    if (num_players < 2) throw InputError("History: at least two players required");
  }

  /// Builds a history from explicit profiles (each of size num_players).
  static History from_profiles(std::size_t num_players,
                               const std::vector<std::vector<Action>>& profiles) {
    History h(num_players);
    for (const auto& p : profiles) h.push(p);
    return h;
  }

  std::size_t num_players() const noexcept { return num_players_; }
  std::size_t length() const noexcept { return actions_.size() / num_players_; }
  bool empty() const noexcept { return actions_.empty(); }

  std::span<const Action> profile(std::size_t period) const {
    if (period == 0 || period > length()) throw InputError("History: period out of range");
    return {actions_.data() + (period - 1) * num_players_, num_players_};
  }

  Action action(std::size_t period, PlayerId player) const {
    if (player.index >= num_players_) throw InputError("History: player out of range");
    return profile(period)[player.index];
  }

  void push(std::span<const Action> profile) {
    if (profile.size() != num_players_) throw InputError("History: profile size mismatch");
    actions_.insert(actions_.end(), profile.begin(), profile.end());
  }
  void push(std::initializer_list<Action> profile) {
    push(std::span<const Action>(profile.begin(), profile.size()));
  }

  void pop() {
    if (empty()) throw InputError("History: pop on empty history");
    actions_.resize(actions_.size() - num_players_);
  }

  void truncate(std::size_t length) {
    if (length < this->length()) actions_.resize(length * num_players_);
  }

  History prefix(std::size_t length) const {
    if (length > this->length()) throw InputError("History: prefix longer than history");
    History h(num_players_);
    h.actions_.assign(actions_.begin(),
                      actions_.begin() + static_cast<std::ptrdiff_t>(length * num_players_));
    return h;
  }

  void reserve(std::size_t periods) { actions_.reserve(periods * num_players_); }

  std::span<const Action> raw() const noexcept { return actions_; }

  bool operator==(const History&) const = default;
  auto operator<=>(const History& other) const {
    return actions_ <=> other.actions_;
  }

 private:
  std::size_t num_players_;
  std::vector<Action> actions_;
};

inline void validate_history(const ActionSpace& space, const History& history) {
  if (history.num_players() != space.num_players()) {
    throw InputError("history has " + std::to_string(history.num_players()) +
                     " players, action space has " + std::to_string(space.num_players()));
  }
  for (std::size_t n = 1; n <= history.length(); ++n) {
    const auto prof = history.profile(n);
    for (std::size_t i = 0; i < prof.size(); ++i) {
      if (prof[i] >= space.alphabet_size(PlayerId{i})) {
        throw InputError("history period " + std::to_string(n) + ": action " +
                         std::to_string(prof[i]) + " out of range for player " +
                         std::to_string(i));
      }
    }
  }
}

/// σ_i : finite histories → Δ(A_i). Implementations must be deterministic and
/// immutable after construction.
class BehaviorStrategy {
 public:
  virtual ~BehaviorStrategy() = default;

  virtual std::size_t alphabet_size() const = 0;

  /// Writes the distribution of `player`'s action in period history.length()+1
  /// into `out`, which has alphabet_size() entries.
  virtual void distribution(PlayerId player, const History& history,
                            std::span<double> out) const = 0;

  /// False in periods where the strategy is off-turn (point mass on a null
  /// action). Deviation wrappers leave inactive periods untouched.
  virtual bool active(std::size_t /*period*/) const { return true; }
};

using StrategyPtr = std::shared_ptr<const BehaviorStrategy>;

/// Validates a raw strategy output in place. Sums off by at most
/// kProbabilityTolerance are renormalized; anything else is rejected.
inline void check_distribution(std::span<double> p) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || x > 1.0 + kProbabilityTolerance) {
      throw InputError("strategy produced an invalid probability entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw InputError("strategy distribution sums to " + std::to_string(total) + ", not 1");
  }
  if (total != 1.0) {
    for (double& x : p) x /= total;
  }
}

inline std::vector<double> action_distribution(const BehaviorStrategy& strategy, PlayerId player,
                                               const History& history) {
  if (player.index >= history.num_players()) throw InputError("player out of range for history");
  for (std::size_t n = 1; n <= history.length(); ++n) {
    if (history.action(n, player) >= strategy.alphabet_size()) {
      throw InputError("history contains an action outside the player's alphabet");
    }
  }
  std::vector<double> out(strategy.alphabet_size(), 0.0);
  strategy.distribution(player, history, out);
  check_distribution(out);
  return out;
}

class StrategyProfile {
 public:
  StrategyProfile() = default;
  explicit StrategyProfile(std::vector<StrategyPtr> strategies)
      : strategies_(std::move(strategies)) {
    if (strategies_.size() < 2) throw InputError("StrategyProfile: at least two players required");
    for (const auto& s : strategies_) {
      if (!s) throw InputError("StrategyProfile: null strategy");
    }
  }

  std::size_t num_players() const noexcept { return strategies_.size(); }
  const BehaviorStrategy& operator[](PlayerId p) const { return *strategies_.at(p.index); }
  const StrategyPtr& ptr(PlayerId p) const { return strategies_.at(p.index); }

  /// The composite (σ_i, σ_{-i}) with player i's strategy replaced.
  StrategyProfile with(PlayerId p, StrategyPtr s) const {
    auto copy = strategies_;
    copy.at(p.index) = std::move(s);
    return StrategyProfile(std::move(copy));
  }

 private:
  std::vector<StrategyPtr> strategies_;
};

enum class Classification { Undetermined, RejectedHere, AcceptedHere };

/// Incremental detector state along one path.
class DetectorCursor {
 public:
  virtual ~DetectorCursor() = default;
  /// Called after `history` has been extended by one period.
  virtual Classification advance(const History& history) = 0;
  virtual std::unique_ptr<DetectorCursor> clone() const = 0;
};

struct FiringPoint {
  Classification kind = Classification::Undetermined;
  std::size_t length = 0;
};

/// Classifies prefixes as rejecting, accepting, or undetermined. A detector
/// fires at most once along a path; the firing prefix is minimal.
class PrefixDetector {
 public:
  virtual ~PrefixDetector() = default;
  virtual std::unique_ptr<DetectorCursor> start() const = 0;

  std::optional<FiringPoint> first_firing(const History& history) const {
    auto cursor = start();
    History replay(history.num_players());
    replay.reserve(history.length());
    for (std::size_t n = 1; n <= history.length(); ++n) {
      replay.push(history.profile(n));
      const auto c = cursor->advance(replay);
      if (c != Classification::Undetermined) return FiringPoint{c, n};
    }
    return std::nullopt;
  }

  /// RejectedHere / AcceptedHere only when `prefix` is the minimal firing
  /// prefix; Undetermined otherwise (including after an earlier firing).
  Classification classify(const History& prefix) const {
    const auto f = first_firing(prefix);
    if (f && f->length == prefix.length()) return f->kind;
    return Classification::Undetermined;
  }
};

/// Which side of the target set is open, i.e. detectable on finite prefixes.
/// Undetermined paths at the horizon count as in the target for
/// OpenSide::Rejection and as missing it for OpenSide::Acceptance.
enum class OpenSide { Rejection, Acceptance };

struct GoalSpec {
  std::string name;
  ActionSpace actions;
  StrategyProfile profile;
  std::shared_ptr<const PrefixDetector> detector;
  OpenSide open_side = OpenSide::Rejection;
};

struct EpisodeStatus {
  enum class Kind { Rejected, Accepted, Undetermined };
  Kind kind = Kind::Undetermined;
  /// Minimal firing prefix length, or the horizon for Undetermined.
  std::size_t length = 0;

  bool operator==(const EpisodeStatus&) const = default;
};

/// Whether a classified path lies in the (horizon-truncated) target set D.
inline bool in_target(const EpisodeStatus& status, OpenSide side) noexcept {
  switch (status.kind) {
    case EpisodeStatus::Kind::Rejected: return false;
    case EpisodeStatus::Kind::Accepted: return true;
    case EpisodeStatus::Kind::Undetermined: return side == OpenSide::Rejection;
  }
  return false;
}

struct EpisodeResult {
  History history;
  EpisodeStatus status;

  bool operator==(const EpisodeResult&) const = default;
};

enum class StopRule {
  AtDetection,  ///< stop at the first detector firing
  FullHorizon   ///< keep sampling to the horizon; status still records the first firing
};

namespace detail {

inline Action sample_action(std::span<const double> p, CounterRng& rng) {
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] == 1.0) return static_cast<Action>(a);
  }
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    cumulative += p[a];
    last_positive = a;
    if (u < cumulative) return static_cast<Action>(a);
  }
  return static_cast<Action>(last_positive);
}

inline EpisodeStatus::Kind to_kind(Classification c) {
  return c == Classification::RejectedHere ? EpisodeStatus::Kind::Rejected
                                           : EpisodeStatus::Kind::Accepted;
}

}  // namespace detail

/// Samples one episode from `actual`, classifying with `goal.detector`.
inline EpisodeResult play_episode(const GoalSpec& goal, const StrategyProfile& actual,
                                  std::size_t horizon, CounterRng& rng,
                                  StopRule stop = StopRule::AtDetection) {
  if (horizon < 1) throw InputError("play_episode: horizon must be >= 1");
  const std::size_t players = goal.actions.num_players();
  if (actual.num_players() != players) throw InputError("play_episode: profile size mismatch");
  for (std::size_t i = 0; i < players; ++i) {
    if (actual[PlayerId{i}].alphabet_size() != goal.actions.alphabet_size(PlayerId{i})) {
      throw InputError("play_episode: strategy alphabet does not match the action space");
    }
  }

  EpisodeResult result{History(players), EpisodeStatus{}};
  result.history.reserve(horizon);
  auto cursor = goal.detector->start();
  std::vector<std::vector<double>> buffers(players);
  for (std::size_t i = 0; i < players; ++i) {
    buffers[i].resize(goal.actions.alphabet_size(PlayerId{i}));
  }
  std::vector<Action> profile(players);
  bool fired = false;

  for (std::size_t n = 1; n <= horizon; ++n) {
    for (std::size_t i = 0; i < players; ++i) {
      auto& buf = buffers[i];
      std::fill(buf.begin(), buf.end(), 0.0);
      actual[PlayerId{i}].distribution(PlayerId{i}, result.history, buf);
      check_distribution(buf);
      profile[i] = detail::sample_action(buf, rng);
    }
    result.history.push(profile);
    if (!fired) {
      const auto c = cursor->advance(result.history);
      if (c != Classification::Undetermined) {
        fired = true;
        result.status = EpisodeStatus{detail::to_kind(c), n};
        if (stop == StopRule::AtDetection) return result;
      }
    }
  }
  if (!fired) result.status = EpisodeStatus{EpisodeStatus::Kind::Undetermined, horizon};
  return result;
}

/// P_σ(z): the product over periods and players of the probability that each
/// player's strategy selects its realized action.
inline double prefix_probability(const StrategyProfile& profile, const History& prefix) {
  const std::size_t players = profile.num_players();
  if (prefix.num_players() != players) throw InputError("prefix_probability: player mismatch");
  History partial(players);
  partial.reserve(prefix.length());
  std::vector<std::vector<double>> buffers(players);
  for (std::size_t i = 0; i < players; ++i) {
    buffers[i].resize(profile[PlayerId{i}].alphabet_size());
  }
  double p = 1.0;
  for (std::size_t n = 1; n <= prefix.length(); ++n) {
    const auto prof = prefix.profile(n);
    for (std::size_t i = 0; i < players; ++i) {
      auto& buf = buffers[i];
      if (prof[i] >= buf.size()) throw InputError("prefix_probability: action out of range");
      std::fill(buf.begin(), buf.end(), 0.0);
      profile[PlayerId{i}].distribution(PlayerId{i}, partial, buf);
      check_distribution(buf);
      p *= buf[prof[i]];
    }
    if (p == 0.0) return 0.0;
    partial.push(prof);
  }
  return p;
}

}  // namespace devlab

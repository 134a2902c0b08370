#pragma once

// Likelihood ratios of a hypothesised deviation against the prescribed
// strategy, accumulated in the log domain, and the maximum-likelihood blame
// rule built on them.

#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "devlab/core.hpp"
#include "devlab/errors.hpp"

namespace devlab {

/// Extended-real log likelihood ratio. Factor conventions: 0/0 contributes 0,
/// c/0 (c > 0) makes the ratio +inf, 0/c makes it -inf. A path on which the
/// hypothesis has probability zero is -inf even if some other factor had a
/// zero baseline probability: the hypothesis cannot have produced it.
class LogLikelihoodRatio {
 public:
  enum class Kind { Finite, PlusInfinity, MinusInfinity };

  constexpr LogLikelihoodRatio() = default;

  static constexpr LogLikelihoodRatio finite(double v) { return LogLikelihoodRatio(Kind::Finite, v); }
  static constexpr LogLikelihoodRatio plus_infinity() {
    return LogLikelihoodRatio(Kind::PlusInfinity, 0.0);
  }
  static constexpr LogLikelihoodRatio minus_infinity() {
    return LogLikelihoodRatio(Kind::MinusInfinity, 0.0);
  }

  constexpr Kind kind() const noexcept { return kind_; }
  constexpr bool is_finite() const noexcept { return kind_ == Kind::Finite; }

  /// Value as a double, with IEEE infinities standing in for the sentinels.
  double value() const noexcept {
    switch (kind_) {
      case Kind::PlusInfinity: return std::numeric_limits<double>::infinity();
      case Kind::MinusInfinity: return -std::numeric_limits<double>::infinity();
      case Kind::Finite: break;
    }
    return value_;
  }

  /// exp of the ratio (the plain likelihood ratio), +inf / 0 for sentinels.
  double ratio() const noexcept { return std::exp(value()); }

  /// Folds in one factor deviation_prob / baseline_prob.
  void accumulate(double deviation_prob, double baseline_prob) noexcept {
    if (kind_ == Kind::MinusInfinity) return;
    if (deviation_prob <= 0.0) {
      if (baseline_prob > 0.0) *this = minus_infinity();
      return;  // 0/0 contributes log 1
    }
    if (baseline_prob <= 0.0) {
      kind_ = Kind::PlusInfinity;
      return;
    }
    if (kind_ == Kind::Finite) value_ += std::log(deviation_prob) - std::log(baseline_prob);
  }

  /// Adds a finite constant (sentinels are unchanged).
  LogLikelihoodRatio shifted(double c) const noexcept {
    return is_finite() ? finite(value_ + c) : *this;
  }

  friend constexpr bool operator==(const LogLikelihoodRatio& a, const LogLikelihoodRatio& b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::Finite || a.value_ == b.value_);
  }
  friend std::partial_ordering operator<=>(const LogLikelihoodRatio& a,
                                           const LogLikelihoodRatio& b) {
    const auto rank = [](Kind k) {
      return k == Kind::MinusInfinity ? 0 : (k == Kind::Finite ? 1 : 2);
    };
    if (a.kind_ != b.kind_) return rank(a.kind_) <=> rank(b.kind_);
    if (a.kind_ == Kind::Finite) return a.value_ <=> b.value_;
    return std::partial_ordering::equivalent;
  }

 private:
  constexpr LogLikelihoodRatio(Kind k, double v) : kind_(k), value_(v) {}

  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

/// Streaming log-likelihood ratio for one player: observe() each period as
/// the path grows. Matches log_likelihood_ratio() on the same prefix exactly.
class LikelihoodAccumulator {
 public:
  LikelihoodAccumulator(const BehaviorStrategy& deviation, const BehaviorStrategy& baseline,
                        PlayerId player)
      : deviation_(&deviation),
        baseline_(&baseline),
        player_(player),
        dev_buf_(deviation.alphabet_size()),
        base_buf_(baseline.alphabet_size()) {
    if (deviation.alphabet_size() != baseline.alphabet_size()) {
      throw InputError("likelihood: deviation and baseline alphabets differ");
    }
  }

  /// `before` is the history up to the previous period; `action` is the
  /// player's realized action in the new period.
  void observe(const History& before, Action action) {
    if (action >= dev_buf_.size()) throw InputError("likelihood: action out of range");
    std::fill(dev_buf_.begin(), dev_buf_.end(), 0.0);
    std::fill(base_buf_.begin(), base_buf_.end(), 0.0);
    deviation_->distribution(player_, before, dev_buf_);
    baseline_->distribution(player_, before, base_buf_);
    check_distribution(dev_buf_);
    check_distribution(base_buf_);
    llr_.accumulate(dev_buf_[action], base_buf_[action]);
  }

  const LogLikelihoodRatio& value() const noexcept { return llr_; }

 private:
  const BehaviorStrategy* deviation_;
  const BehaviorStrategy* baseline_;
  PlayerId player_;
  std::vector<double> dev_buf_;
  std::vector<double> base_buf_;
  LogLikelihoodRatio llr_;
};

inline LogLikelihoodRatio log_likelihood_ratio(const BehaviorStrategy& deviation,
                                               const BehaviorStrategy& baseline, PlayerId player,
                                               const History& prefix) {
  if (player.index >= prefix.num_players()) throw InputError("likelihood: player out of range");
  LikelihoodAccumulator acc(deviation, baseline, player);
  History partial(prefix.num_players());
  partial.reserve(prefix.length());
  for (std::size_t n = 1; n <= prefix.length(); ++n) {
    acc.observe(partial, prefix.action(n, player));
    if (acc.value().kind() == LogLikelihoodRatio::Kind::MinusInfinity) break;
    partial.push(prefix.profile(n));
  }
  return acc.value();
}

struct BlameVerdict {
  PlayerId blamed;
  std::vector<LogLikelihoodRatio> per_player_llr;
  /// The maximum was attained by more than one player.
  bool tie = false;
  /// Every player's ratio was +inf; the lowest index was blamed by convention.
  bool all_plus_infinite = false;
};

/// Blames the player whose log-likelihood ratio is maximal; ties go to the
/// lowest index.
inline BlameVerdict blame_from_llrs(std::vector<LogLikelihoodRatio> llrs) {
  if (llrs.empty()) throw InputError("blame: no players");
  BlameVerdict v;
  std::size_t best = 0;
  std::size_t maximizers = 1;
  for (std::size_t i = 1; i < llrs.size(); ++i) {
    const auto c = llrs[i] <=> llrs[best];
    if (c > 0) {
      best = i;
      maximizers = 1;
    } else if (c == 0) {
      ++maximizers;
    }
  }
  v.blamed = PlayerId{best};
  v.tie = maximizers > 1;
  v.all_plus_infinite = std::all_of(llrs.begin(), llrs.end(), [](const auto& l) {
    return l.kind() == LogLikelihoodRatio::Kind::PlusInfinity;
  });
  v.per_player_llr = std::move(llrs);
  return v;
}

inline BlameVerdict max_likelihood_blame(const StrategyProfile& hypothesis,
                                         const StrategyProfile& baseline,
                                         const History& rejected_prefix) {
  const std::size_t players = baseline.num_players();
  if (hypothesis.num_players() != players) throw InputError("blame: profile size mismatch");
  std::vector<LogLikelihoodRatio> llrs;
  llrs.reserve(players);
  for (std::size_t i = 0; i < players; ++i) {
    llrs.push_back(log_likelihood_ratio(hypothesis[PlayerId{i}], baseline[PlayerId{i}],
                                        PlayerId{i}, rejected_prefix));
  }
  return blame_from_llrs(std::move(llrs));
}

/// Innocent-blame guarantee 2·sqrt((|I|-1)·ε) for goals missed with
/// probability ε under the prescribed profile.
inline double testability_bound(std::size_t num_players, double epsilon) {
  if (num_players < 2) throw InputError("testability_bound: at least two players required");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("testability_bound: epsilon not in [0,1]");
  return 2.0 * std::sqrt(static_cast<double>(num_players - 1) * epsilon);
}

/// Per-adversary guarantee sqrt((|I|-1)·ε) of the likelihood-ratio response.
inline double likelihood_response_bound(std::size_t num_players, double epsilon) {
  return testability_bound(num_players, epsilon) / 2.0;
}

}  // namespace devlab

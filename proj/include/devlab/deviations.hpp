#pragma once

// Adversary strategies: a deviation agrees with the prescribed (baseline)
// strategy except where its kind says otherwise. Off-turn periods of an
// alternating baseline are never touched.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "devlab/alternating.hpp"
#include "devlab/core.hpp"
#include "devlab/errors.hpp"
#include "devlab/random_walk.hpp"

namespace devlab {

struct DeviationSpec {
  enum class Kind { Honest, AlwaysAction, FirstMoveThenHonest, Biased, PinToBand, DriftUp, ReflectAtOne };

  Kind kind = Kind::Honest;
  PlayerId player{0};
  Action action = 0;          ///< AlwaysAction / FirstMoveThenHonest
  double p = 0.5;             ///< Biased / DriftUp
  std::int64_t lo = 1;        ///< PinToBand
  std::int64_t hi = 1;        ///< PinToBand

  static DeviationSpec honest(PlayerId who) { return {Kind::Honest, who}; }
  static DeviationSpec always(PlayerId who, Action a) { return {Kind::AlwaysAction, who, a}; }
  static DeviationSpec first_move(PlayerId who, Action a) {
    return {Kind::FirstMoveThenHonest, who, a};
  }
  static DeviationSpec biased(PlayerId who, double p) { return {Kind::Biased, who, 0, p}; }
  static DeviationSpec drift_up(PlayerId who, double p) { return {Kind::DriftUp, who, 0, p}; }
  static DeviationSpec pin_to_band(PlayerId who, std::int64_t lo, std::int64_t hi) {
    return {Kind::PinToBand, who, 0, 0.5, lo, hi};
  }
  static DeviationSpec reflect_at_one(PlayerId who) { return {Kind::ReflectAtOne, who}; }

  void validate() const {
    if ((kind == Kind::Biased || kind == Kind::DriftUp) && !(p >= 0.0 && p <= 1.0)) {
      throw InputError("deviation: probability p must lie in [0, 1]");
    }
    if (kind == Kind::PinToBand && !(1 <= lo && lo <= hi)) {
      throw InputError("deviation: PinToBand requires 1 <= lo <= hi");
    }
  }

  bool operator==(const DeviationSpec&) const = default;
};

inline const char* to_string(DeviationSpec::Kind k) {
  switch (k) {
    case DeviationSpec::Kind::Honest: return "honest";
    case DeviationSpec::Kind::AlwaysAction: return "always_action";
    case DeviationSpec::Kind::FirstMoveThenHonest: return "first_move_then_honest";
    case DeviationSpec::Kind::Biased: return "biased";
    case DeviationSpec::Kind::PinToBand: return "pin_to_band";
    case DeviationSpec::Kind::DriftUp: return "drift_up";
    case DeviationSpec::Kind::ReflectAtOne: return "reflect_at_one";
  }
  return "?";
}

namespace detail {

/// Deviation over an arbitrary baseline, acting only in the baseline's
/// active periods.
class DeviatedStrategy final : public BehaviorStrategy {
 public:
  DeviatedStrategy(StrategyPtr baseline, DeviationSpec spec)
      : baseline_(std::move(baseline)), spec_(spec) {}

  std::size_t alphabet_size() const override { return baseline_->alphabet_size(); }
  bool active(std::size_t period) const override { return baseline_->active(period); }

  void distribution(PlayerId player, const History& history, std::span<double> out) const override {
    const std::size_t period = history.length() + 1;
    if (player != spec_.player || !baseline_->active(period)) {
      baseline_->distribution(player, history, out);
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    switch (spec_.kind) {
      case DeviationSpec::Kind::AlwaysAction:
        out[spec_.action] = 1.0;
        return;
      case DeviationSpec::Kind::FirstMoveThenHonest:
        if (first_active(period)) {
          out[spec_.action] = 1.0;
        } else {
          baseline_->distribution(player, history, out);
        }
        return;
      case DeviationSpec::Kind::Biased:
        out[1] = spec_.p;
        out[0] = 1.0 - spec_.p;
        return;
      default:
        baseline_->distribution(player, history, out);
        return;
    }
  }

 private:
  bool first_active(std::size_t period) const {
    for (std::size_t p = 1; p < period; ++p) {
      if (baseline_->active(p)) return false;
    }
    return true;
  }

  StrategyPtr baseline_;
  DeviationSpec spec_;
};

class ConstantUpRule final : public WalkMoveRule {
 public:
  explicit ConstantUpRule(double p) : p_(p) {}
  double up_probability(std::int64_t, std::size_t) const override { return p_; }

 private:
  double p_;
};

class FirstMoveRule final : public WalkMoveRule {
 public:
  FirstMoveRule(double first_up, WalkRulePtr rest) : first_up_(first_up), rest_(std::move(rest)) {}
  double up_probability(std::int64_t s, std::size_t k) const override {
    return k == 1 ? first_up_ : rest_->up_probability(s, k);
  }

 private:
  double first_up_;
  WalkRulePtr rest_;
};

class DriftUpRule final : public WalkMoveRule {
 public:
  DriftUpRule(double p, WalkRulePtr base) : p_(p), base_(std::move(base)) {}
  double up_probability(std::int64_t s, std::size_t k) const override {
    return p_ + (1.0 - p_) * base_->up_probability(s, k);
  }

 private:
  double p_;
  WalkRulePtr base_;
};

/// Picks the move that keeps the next position inside [lo, hi]; plays the
/// baseline when both moves stay inside; walks toward the band from outside.
class PinToBandRule final : public WalkMoveRule {
 public:
  PinToBandRule(std::int64_t lo, std::int64_t hi, WalkRulePtr base)
      : lo_(lo), hi_(hi), base_(std::move(base)) {}
  double up_probability(std::int64_t s, std::size_t k) const override {
    const bool up_in = inside(s + 1);
    const bool down_in = inside(s - 1);
    if (up_in && down_in) return base_->up_probability(s, k);
    if (up_in) return 1.0;
    if (down_in) return 0.0;
    return s > hi_ ? 0.0 : 1.0;
  }

 private:
  bool inside(std::int64_t x) const noexcept { return lo_ <= x && x <= hi_; }

  std::int64_t lo_;
  std::int64_t hi_;
  WalkRulePtr base_;
};

/// Steps up from position 1 (the only move that would hit the origin);
/// baseline elsewhere.
class ReflectAtOneRule final : public WalkMoveRule {
 public:
  explicit ReflectAtOneRule(WalkRulePtr base) : base_(std::move(base)) {}
  double up_probability(std::int64_t s, std::size_t k) const override {
    return s == 1 ? 1.0 : base_->up_probability(s, k);
  }

 private:
  WalkRulePtr base_;
};

inline double walk_point_mass(Action a) {
  if (a == rw::kUp) return 1.0;
  if (a == rw::kDown) return 0.0;
  throw InputError("deviation: walk moves must be -1 or +1");
}

inline WalkRulePtr build_walk_rule(const DeviationSpec& spec, const WalkRulePtr& base) {
  using K = DeviationSpec::Kind;
  switch (spec.kind) {
    case K::Honest: return base;
    case K::AlwaysAction: return std::make_shared<ConstantUpRule>(walk_point_mass(spec.action));
    case K::FirstMoveThenHonest:
      return std::make_shared<FirstMoveRule>(walk_point_mass(spec.action), base);
    case K::Biased: return std::make_shared<ConstantUpRule>(spec.p);
    case K::DriftUp: return std::make_shared<DriftUpRule>(spec.p, base);
    case K::PinToBand: return std::make_shared<PinToBandRule>(spec.lo, spec.hi, base);
    case K::ReflectAtOne: return std::make_shared<ReflectAtOneRule>(base);
  }
  throw InputError("deviation: unknown kind");
}

}  // namespace detail

/// Builds the deviation described by `spec` on top of `baseline`, the
/// prescribed strategy of spec.player.
inline StrategyPtr build_deviation(const DeviationSpec& spec, const StrategyPtr& baseline) {
  spec.validate();
  if (!baseline) throw InputError("deviation: null baseline");
  using K = DeviationSpec::Kind;

  if (const auto* walk = dynamic_cast<const WalkStrategy*>(baseline.get())) {
    if (walk->owner() != spec.player) throw InputError("deviation: baseline belongs to another player");
    if (spec.kind == K::Honest) return baseline;
    return std::make_shared<WalkStrategy>(spec.player, detail::build_walk_rule(spec, walk->rule()),
                                          walk->start());
  }
  if (const auto* alt = dynamic_cast<const AlternatingStrategy*>(baseline.get())) {
    if (alt->owner() != spec.player) throw InputError("deviation: baseline belongs to another player");
  }

  switch (spec.kind) {
    case K::Honest: return baseline;
    case K::AlwaysAction:
    case K::FirstMoveThenHonest:
      if (spec.action >= baseline->alphabet_size()) {
        throw InputError("deviation: action outside the player's alphabet");
      }
      break;
    case K::Biased:
      if (baseline->alphabet_size() != 2) {
        throw InputError("deviation: Biased requires a binary alphabet or a walk");
      }
      break;
    case K::PinToBand:
    case K::DriftUp:
    case K::ReflectAtOne:
      throw InputError(std::string("deviation: ") + to_string(spec.kind) +
                       " applies only to random-walk strategies");
  }
  return std::make_shared<detail::DeviatedStrategy>(baseline, spec);
}

/// Replaces each listed player's strategy by its deviation.
inline StrategyProfile apply_deviations(const StrategyProfile& baseline,
                                        std::span<const DeviationSpec> specs) {
  StrategyProfile out = baseline;
  for (const auto& spec : specs) {
    if (spec.player.index >= baseline.num_players()) throw InputError("deviation: player out of range");
    out = out.with(spec.player, build_deviation(spec, baseline.ptr(spec.player)));
  }
  return out;
}

/// Move rule of a walk player, for the direct walk simulator.
inline WalkRulePtr walk_rule_of(const StrategyProfile& profile, PlayerId player) {
  const auto* walk = dynamic_cast<const WalkStrategy*>(profile.ptr(player).get());
  if (!walk) throw InputError("profile is not a random-walk profile");
  return walk->rule();
}

}  // namespace devlab

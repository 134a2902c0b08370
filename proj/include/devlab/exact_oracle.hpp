#pragma once

// Exhaustive enumeration of small instances: exact measures over histories,
// exact event probabilities under a goal's classification, and an exact check
// of the likelihood-ratio blame inequalities on the rejection set Z_n.
//
// The tree is expanded depth-first in lexicographic order of action profiles
// (player 0 most significant); branches with probability zero under every
// tracked profile are pruned. Sums are Kahan-compensated.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "devlab/core.hpp"
#include "devlab/errors.hpp"
#include "devlab/likelihood.hpp"
#include "devlab/numeric.hpp"

namespace devlab {

inline constexpr std::size_t kDefaultOracleBudget = std::size_t{1} << 24;
inline constexpr double kOracleTolerance = 1e-10;

struct WeightedHistory {
  History history;
  double probability = 0.0;
};

/// Probabilities of every reachable length-n history; unreachable ones are 0.
class ExactMeasure {
 public:
  explicit ExactMeasure(std::vector<WeightedHistory> entries) : entries_(std::move(entries)) {}

  const std::vector<WeightedHistory>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double probability(const History& h) const {
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), h,
                                     [](const WeightedHistory& e, const History& x) {
                                       return e.history < x;
                                     });
    return (it != entries_.end() && it->history == h) ? it->probability : 0.0;
  }

  double total() const {
    KahanSum s;
    for (const auto& e : entries_) s += e.probability;
    return s.value();
  }

 private:
  std::vector<WeightedHistory> entries_;
};

struct ClassifiedHistory {
  History history;
  double probability = 0.0;
  EpisodeStatus status;
  bool in_target = true;
};

namespace detail {

/// Upper bound on the number of leaves: active periods multiply by the
/// alphabet size, inactive (point-mass) periods by one.
inline double enumeration_size_bound(const std::vector<const StrategyProfile*>& profiles,
                                     std::size_t horizon) {
  const std::size_t players = profiles.front()->num_players();
  double bound = 1.0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    for (std::size_t i = 0; i < players; ++i) {
      bool active = false;
      for (const auto* prof : profiles) active = active || (*prof)[PlayerId{i}].active(n);
      if (active) bound *= static_cast<double>((*profiles.front())[PlayerId{i}].alphabet_size());
    }
  }
  return bound;
}

using LeafVisitor =
    std::function<void(const History&, std::span<const double>, const EpisodeStatus&)>;

class TreeWalker {
 public:
  TreeWalker(std::vector<const StrategyProfile*> profiles, const PrefixDetector* detector,
             std::size_t horizon, std::size_t budget, const LeafVisitor& visit)
      : profiles_(std::move(profiles)), detector_(detector), horizon_(horizon), budget_(budget),
        visit_(visit), players_(profiles_.front()->num_players()), history_(players_) {
    for (const auto* p : profiles_) {
      if (p->num_players() != players_) throw InputError("oracle: profile size mismatch");
      for (std::size_t i = 0; i < players_; ++i) {
        if ((*p)[PlayerId{i}].alphabet_size() != (*profiles_.front())[PlayerId{i}].alphabet_size()) {
          throw InputError("oracle: profiles disagree on alphabet sizes");
        }
      }
    }
    const double bound = enumeration_size_bound(profiles_, horizon_);
    if (bound > static_cast<double>(budget_)) {
      throw ResourceError("oracle: up to " + std::to_string(bound) +
                          " histories exceed the enumeration budget of " + std::to_string(budget_));
    }
    history_.reserve(horizon_);
  }

  void run() {
    std::vector<double> probs(profiles_.size(), 1.0);
    std::unique_ptr<DetectorCursor> cursor = detector_ ? detector_->start() : nullptr;
    expand(probs, cursor.get());
  }

 private:
  void expand(const std::vector<double>& probs, DetectorCursor* cursor) {
    const std::size_t depth = history_.length();
    if (depth == horizon_) {
      leaf(probs, EpisodeStatus{EpisodeStatus::Kind::Undetermined, horizon_});
      return;
    }
    // dist[k][i]: distribution of player i under profile k at this node.
    const std::size_t K = profiles_.size();
    std::vector<std::vector<std::vector<double>>> dist(K, std::vector<std::vector<double>>(players_));
    std::vector<std::vector<Action>> support(players_);
    for (std::size_t i = 0; i < players_; ++i) {
      const std::size_t size = (*profiles_.front())[PlayerId{i}].alphabet_size();
      std::vector<bool> any(size, false);
      for (std::size_t k = 0; k < K; ++k) {
        if (probs[k] == 0.0) {
          dist[k][i].assign(size, 0.0);
          continue;
        }
        dist[k][i].assign(size, 0.0);
        (*profiles_[k])[PlayerId{i}].distribution(PlayerId{i}, history_, dist[k][i]);
        check_distribution(dist[k][i]);
        for (std::size_t a = 0; a < size; ++a) any[a] = any[a] || dist[k][i][a] > 0.0;
      }
      for (std::size_t a = 0; a < size; ++a) {
        if (any[a]) support[i].push_back(static_cast<Action>(a));
      }
      if (support[i].empty()) return;
    }

    std::vector<std::size_t> idx(players_, 0);
    std::vector<Action> profile(players_);
    std::vector<double> child(K);
    for (;;) {
      for (std::size_t i = 0; i < players_; ++i) profile[i] = support[i][idx[i]];
      bool reachable = false;
      for (std::size_t k = 0; k < K; ++k) {
        double p = probs[k];
        for (std::size_t i = 0; i < players_ && p != 0.0; ++i) p *= dist[k][i][profile[i]];
        child[k] = p;
        reachable = reachable || p > 0.0;
      }
      if (reachable) {
        history_.push(profile);
        std::unique_ptr<DetectorCursor> next = cursor ? cursor->clone() : nullptr;
        Classification c = Classification::Undetermined;
        if (next) c = next->advance(history_);
        if (c != Classification::Undetermined) {
          leaf(child, EpisodeStatus{detail::to_kind(c), history_.length()});
        } else {
          expand(child, next.get());
        }
        history_.pop();
      }
      // Odometer increment, last player fastest.
      std::size_t i = players_;
      while (i > 0) {
        --i;
        if (++idx[i] < support[i].size()) break;
        idx[i] = 0;
        if (i == 0) return;
      }
    }
  }

  void leaf(std::span<const double> probs, const EpisodeStatus& status) {
    if (++leaves_ > budget_) throw ResourceError("oracle: enumeration budget exceeded");
    visit_(history_, probs, status);
  }

  std::vector<const StrategyProfile*> profiles_;
  const PrefixDetector* detector_;
  std::size_t horizon_;
  std::size_t budget_;
  const LeafVisitor& visit_;
  std::size_t players_;
  History history_;
  std::size_t leaves_ = 0;
};

}  // namespace detail

/// Every reachable history of length `horizon` with its probability.
inline ExactMeasure enumerate_measure(const StrategyProfile& profile, std::size_t horizon,
                                      std::size_t budget = kDefaultOracleBudget) {
  std::vector<WeightedHistory> out;
  const detail::LeafVisitor visit = [&](const History& h, std::span<const double> p,
                                        const EpisodeStatus&) {
    if (p[0] > 0.0) out.push_back({h, p[0]});
  };
  detail::TreeWalker({&profile}, nullptr, horizon, budget, visit).run();
  return ExactMeasure(std::move(out));
}

/// Histories stopped at the goal's first detector firing or at the horizon.
inline void for_each_classified(const GoalSpec& goal, const StrategyProfile& profile,
                                std::size_t horizon,
                                const std::function<void(const ClassifiedHistory&)>& visit,
                                std::size_t budget = kDefaultOracleBudget) {
  ClassifiedHistory item{History(profile.num_players()), 0.0, {}, true};
  const detail::LeafVisitor leaf = [&](const History& h, std::span<const double> p,
                                       const EpisodeStatus& status) {
    if (p[0] <= 0.0) return;
    item.history = h;
    item.probability = p[0];
    item.status = status;
    item.in_target = in_target(status, goal.open_side);
    visit(item);
  };
  detail::TreeWalker({&profile}, goal.detector.get(), horizon, budget, leaf).run();
}

inline double exact_event_probability(const GoalSpec& goal, const StrategyProfile& profile,
                                      std::size_t horizon,
                                      const std::function<bool(const ClassifiedHistory&)>& event,
                                      std::size_t budget = kDefaultOracleBudget) {
  KahanSum sum;
  for_each_classified(
      goal, profile, horizon,
      [&](const ClassifiedHistory& c) {
        if (event(c)) sum += c.probability;
      },
      budget);
  return sum.value();
}

/// Probability that the goal is missed by the horizon (truncation by polarity).
inline double exact_miss_probability(const GoalSpec& goal, const StrategyProfile& profile,
                                     std::size_t horizon,
                                     std::size_t budget = kDefaultOracleBudget) {
  return exact_event_probability(
      goal, profile, horizon, [](const ClassifiedHistory& c) { return !c.in_target; }, budget);
}

/// True iff no history in `set` is a proper prefix of another.
inline bool is_prefix_free(std::vector<History> set) {
  std::sort(set.begin(), set.end());
  for (std::size_t k = 0; k + 1 < set.size(); ++k) {
    const History& a = set[k];
    for (std::size_t m = k + 1; m < set.size(); ++m) {
      const History& b = set[m];
      if (b.length() < a.length()) continue;
      const auto ra = a.raw();
      const auto rb = b.raw();
      if (!std::equal(ra.begin(), ra.end(), rb.begin())) break;
      return false;
    }
  }
  return true;
}

struct BlameBoundsReport {
  std::size_t num_players = 0;
  std::size_t horizon = 0;
  std::size_t rejection_set_size = 0;
  bool rejection_set_prefix_free = true;

  double p_star_target = 0.0;          ///< P_{σ*}(D_n), from non-rejected leaves
  double p_star_miss = 0.0;            ///< P_{σ*}(D_n^c) = P_{σ*}(Z_n)
  std::vector<double> p_star_blame;    ///< [j] P_{σ*}(E_j)
  std::vector<double> p_dev_miss;      ///< [i] P_{σ_i,σ*_{-i}}(D_n^c)
  /// [i][j] P_{σ_i,σ*_{-i}}(E_j)
  std::vector<std::vector<double>> p_dev_blame;
  /// [i][j] Σ_{z∈E_j} ℓ_i(z)² P_{σ*}(z), NaN where some ℓ_i on E_j is infinite
  std::vector<std::vector<double>> second_moment;
  /// [i][j] Σ_{z∈E_j} ℓ_i(z) ℓ_j(z) P_{σ*}(z), NaN where infinite
  std::vector<std::vector<double>> cross_moment;
  /// [i][j] P_{σ_i,σ_j,σ*_{-i,j}}(E_j), i != j
  std::vector<std::vector<double>> p_pair_blame;

  /// Largest relative deviation of P_{σ_i,σ*_{-i}}(z) from e^{ℓ_i(z)} P_{σ*}(z).
  double max_factorization_error = 0.0;
  std::size_t all_infinite_verdicts = 0;

  bool squared_bound_holds = true;     ///< (a) P_i(E_j)² <= P*(E_j)
  bool chain_holds = true;             ///< intermediate Cauchy-Schwarz steps, where finite
  bool innocent_bound_holds = true;    ///< (b) Σ_{j≠i} P_i(E_j) <= sqrt((|I|-1) P*(D_n^c))
  bool testability_identity_holds = true;  ///< (c)
  std::vector<std::string> violations;

  bool all_hold() const noexcept {
    return rejection_set_prefix_free && squared_bound_holds && chain_holds &&
           innocent_bound_holds && testability_identity_holds;
  }
};

/// Exact check of the likelihood-ratio blame inequalities. E_j is the set of
/// minimal rejecting prefixes (length <= horizon) on which the max-likelihood
/// rule, with `hypothesis` against the goal's profile, blames j.
inline BlameBoundsReport verify_blame_bounds(const GoalSpec& goal, const StrategyProfile& hypothesis,
                                             std::size_t horizon,
                                             std::size_t budget = kDefaultOracleBudget) {
  const StrategyProfile& baseline = goal.profile;
  const std::size_t I = baseline.num_players();
  if (hypothesis.num_players() != I) throw InputError("verify_blame_bounds: profile size mismatch");

  // Tracked profiles: σ*, then (σ_i, σ*_{-i}) for each i, then pairs i < j.
  std::vector<StrategyProfile> tracked;
  tracked.push_back(baseline);
  for (std::size_t i = 0; i < I; ++i) {
    tracked.push_back(baseline.with(PlayerId{i}, hypothesis.ptr(PlayerId{i})));
  }
  std::vector<std::vector<std::size_t>> pair_index(I, std::vector<std::size_t>(I, 0));
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = i + 1; j < I; ++j) {
      pair_index[i][j] = pair_index[j][i] = tracked.size();
      tracked.push_back(baseline.with(PlayerId{i}, hypothesis.ptr(PlayerId{i}))
                            .with(PlayerId{j}, hypothesis.ptr(PlayerId{j})));
    }
  }
  std::vector<const StrategyProfile*> ptrs;
  for (const auto& t : tracked) ptrs.push_back(&t);

  using Matrix = std::vector<std::vector<KahanSum>>;
  KahanSum star_target, star_miss;
  std::vector<KahanSum> star_blame(I), dev_miss(I);
  Matrix dev_blame(I, std::vector<KahanSum>(I)), second(I, std::vector<KahanSum>(I)),
      cross(I, std::vector<KahanSum>(I)), pair(I, std::vector<KahanSum>(I));
  std::vector<std::vector<bool>> finite(I, std::vector<bool>(I, true));
  std::vector<History> rejection_set;

  BlameBoundsReport r;
  r.num_players = I;
  r.horizon = horizon;

  const detail::LeafVisitor visit = [&](const History& h, std::span<const double> p,
                                        const EpisodeStatus& status) {
    if (status.kind != EpisodeStatus::Kind::Rejected) {
      star_target += p[0];
      return;
    }
    rejection_set.push_back(h);
    star_miss += p[0];
    for (std::size_t i = 0; i < I; ++i) dev_miss[i] += p[1 + i];

    const BlameVerdict v = max_likelihood_blame(hypothesis, baseline, h);
    if (v.all_plus_infinite) ++r.all_infinite_verdicts;
    const std::size_t j = v.blamed.index;
    star_blame[j] += p[0];
    for (std::size_t i = 0; i < I; ++i) {
      const auto& li = v.per_player_llr[i];
      dev_blame[i][j] += p[1 + i];
      if (li.is_finite()) {
        const double expected = std::exp(li.value()) * p[0];
        const double scale = std::max({p[1 + i], expected, std::numeric_limits<double>::min()});
        r.max_factorization_error =
            std::max(r.max_factorization_error, std::abs(p[1 + i] - expected) / scale);
      }
      if (i == j) continue;
      pair[i][j] += p[pair_index[i][j]];
      const auto& lj = v.per_player_llr[j];
      if (li.is_finite() && lj.is_finite()) {
        second[i][j] += std::exp(2.0 * li.value()) * p[0];
        cross[i][j] += std::exp(li.value() + lj.value()) * p[0];
      } else {
        finite[i][j] = false;
      }
    }
  };
  detail::TreeWalker(ptrs, goal.detector.get(), horizon, budget, visit).run();

  r.rejection_set_size = rejection_set.size();
  r.rejection_set_prefix_free = is_prefix_free(rejection_set);
  if (!r.rejection_set_prefix_free) r.violations.push_back("rejection set is not prefix-free");
  r.p_star_target = star_target.value();
  r.p_star_miss = star_miss.value();
  r.p_star_blame.resize(I);
  r.p_dev_miss.resize(I);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.p_dev_blame.assign(I, std::vector<double>(I, 0.0));
  r.second_moment.assign(I, std::vector<double>(I, nan));
  r.cross_moment.assign(I, std::vector<double>(I, nan));
  r.p_pair_blame.assign(I, std::vector<double>(I, nan));
  for (std::size_t j = 0; j < I; ++j) r.p_star_blame[j] = star_blame[j].value();
  for (std::size_t i = 0; i < I; ++i) {
    r.p_dev_miss[i] = dev_miss[i].value();
    for (std::size_t j = 0; j < I; ++j) {
      r.p_dev_blame[i][j] = dev_blame[i][j].value();
      if (i == j) continue;
      r.p_pair_blame[i][j] = pair[i][j].value();
      if (finite[i][j]) {
        r.second_moment[i][j] = second[i][j].value();
        r.cross_moment[i][j] = cross[i][j].value();
      }
    }
  }

  const double tol = kOracleTolerance;
  const auto fail = [&](bool& flag, std::string what) {
    flag = false;
    r.violations.push_back(std::move(what));
  };
  const double innocent_cap = std::sqrt(static_cast<double>(I - 1) * r.p_star_miss);
  KahanSum blamed_innocent_star;
  for (std::size_t i = 0; i < I; ++i) {
    KahanSum innocent;
    for (std::size_t j = 0; j < I; ++j) {
      if (j == i) continue;
      const double pij = r.p_dev_blame[i][j];
      const double pj = r.p_star_blame[j];
      innocent += pij;
      blamed_innocent_star += pj;
      if (pij * pij > pj + tol) {
        fail(r.squared_bound_holds, "P_" + std::to_string(i) + "(E_" + std::to_string(j) +
                                        ")^2 = " + std::to_string(pij * pij) + " > P*(E_j) = " +
                                        std::to_string(pj));
      }
      if (!std::isnan(r.second_moment[i][j])) {
        const double s2 = r.second_moment[i][j];
        const double c2 = r.cross_moment[i][j];
        const bool ok = pij * pij <= s2 * pj + tol && s2 <= c2 + tol &&
                        std::abs(c2 - r.p_pair_blame[i][j]) <= tol &&
                        r.p_pair_blame[i][j] * pj <= pj + tol;
        if (!ok) {
          fail(r.chain_holds, "Cauchy-Schwarz chain broken for i=" + std::to_string(i) +
                                  ", j=" + std::to_string(j));
        }
      }
    }
    if (innocent.value() > innocent_cap + tol) {
      fail(r.innocent_bound_holds, "player " + std::to_string(i) + ": innocent blame " +
                                       std::to_string(innocent.value()) + " > " +
                                       std::to_string(innocent_cap));
    }
  }
  const double identity_rhs = 1.0 - blamed_innocent_star.value() / static_cast<double>(I - 1);
  if (std::abs(r.p_star_target - identity_rhs) > tol) {
    fail(r.testability_identity_holds, "P*(D_n) = " + std::to_string(r.p_star_target) +
                                           " but identity gives " + std::to_string(identity_rhs));
  }
  return r;
}

}  // namespace devlab

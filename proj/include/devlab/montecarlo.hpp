#pragma once

// Trial runner. Trial t draws from its own stream CounterRng(seed, t); trials
// run in fixed-size batches, workers pick up contiguous blocks, and outcomes
// are reduced in trial-index order, so results do not depend on the number
// of worker threads.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "devlab/adjacent_ones.hpp"
#include "devlab/core.hpp"
#include "devlab/deviations.hpp"
#include "devlab/errors.hpp"
#include "devlab/likelihood.hpp"
#include "devlab/numeric.hpp"
#include "devlab/random_walk.hpp"
#include "devlab/rng.hpp"
#include "devlab/single_bit.hpp"

namespace devlab {

enum class GoalId { AdjacentOnes, RandomWalk, SingleBit };
enum class BlameId { AdjacentThreshold, Likelihood, RandomWalk };
enum class AdjBlameVariant { FullHorizon, Prefix };

struct GoalConfig {
  GoalId id = GoalId::AdjacentOnes;
  double mu = 0.1;                      ///< adjacent_ones, single_bit
  std::int64_t start = rw::kDefaultStart;  ///< random_walk
  bool operator==(const GoalConfig&) const = default;
};

struct BlameConfig {
  BlameId id = BlameId::AdjacentThreshold;
  AdjBlameVariant variant = AdjBlameVariant::FullHorizon;
  std::vector<DeviationSpec> hypothesis;  ///< likelihood: one candidate deviation per player
  SurrogateThresholds thresholds;         ///< random_walk
  bool operator==(const BlameConfig&) const = default;
};

struct ExperimentConfig {
  std::string name;
  GoalConfig goal;
  std::vector<DeviationSpec> deviations;
  BlameConfig blame;
  std::size_t horizon = 1;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  double confidence = 0.99;
  /// When non-zero, sampling stops once this many missed episodes were seen
  /// (or `trials` episodes were drawn, whichever comes first).
  std::size_t conditioned = 0;
  unsigned threads = 1;

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    switch (goal.id) {
      case GoalId::AdjacentOnes:
      case GoalId::SingleBit:
        if (!(goal.mu > 0.0 && goal.mu <= 1.0)) throw ConfigError("goal.mu must lie in (0, 1]");
        break;
      case GoalId::RandomWalk:
        if (goal.start < 1) throw ConfigError("goal.start must be >= 1");
        if (horizon % 2 != 0) throw ConfigError("random_walk horizon must be even");
        break;
    }
    if (blame.id == BlameId::AdjacentThreshold && goal.id != GoalId::AdjacentOnes) {
      throw ConfigError("blame 'adjacent_threshold' requires goal 'adjacent_ones'");
    }
    if (blame.id == BlameId::RandomWalk) {
      if (goal.id != GoalId::RandomWalk) throw ConfigError("blame 'random_walk' requires goal 'random_walk'");
      try {
        blame.thresholds.validate();
      } catch (const InputError& e) {
        throw ConfigError(std::string("blame.thresholds: ") + e.what());
      }
      if (horizon / 2 < blame.thresholds.n0) throw ConfigError("horizon too short for burn-in n0");
    }
    for (const auto& d : deviations) {
      if (d.player.index > 1) throw ConfigError("deviation player out of range");
    }
    for (const auto& d : blame.hypothesis) {
      if (d.player.index > 1) throw ConfigError("hypothesis player out of range");
    }
  }
};

inline GoalSpec make_goal(const GoalConfig& g) {
  switch (g.id) {
    case GoalId::AdjacentOnes: return adjacent_ones_goal(g.mu);
    case GoalId::RandomWalk: return random_walk_goal(g.start);
    case GoalId::SingleBit: return single_bit_goal(g.mu);
  }
  throw ConfigError("unknown goal");
}

struct Estimate {
  std::size_t count = 0;
  std::size_t out_of = 0;
  double p = 0.0;
  Interval ci;
};

inline Estimate make_estimate(std::size_t k, std::size_t n, double confidence) {
  Estimate e{k, n, 0.0, {0.0, 1.0}};
  if (n > 0) {
    e.p = static_cast<double>(k) / static_cast<double>(n);
    e.ci = wilson_interval(k, n, confidence);
  }
  return e;
}

struct EstimateReport {
  ExperimentConfig config;
  std::size_t trials = 0;   ///< episodes simulated
  std::size_t reached = 0;  ///< episodes in the (truncated) target set
  std::size_t missed = 0;
  std::vector<std::size_t> blamed;        ///< [j] missed episodes blaming j
  std::array<std::size_t, 5> decided_at_step{};  ///< random_walk blame, index 1..4
  Estimate p_miss;
  std::vector<Estimate> p_miss_and_blame;     ///< P(D^c and f = j)
  std::vector<Estimate> p_blame_given_miss;   ///< P(f = j | D^c)
  Estimate p_early_decision_given_miss;       ///< random_walk: decided at steps 1-3
  double runtime_seconds = 0.0;
};

struct TrialOutcome {
  bool missed = false;
  std::int8_t blamed = -1;
  std::uint8_t step = 0;
};

namespace detail {

/// Runs fn(index, worker) for index in [first, first + count) on `threads`
/// workers; out[index - first] receives each result.
template <class Fn>
void parallel_trials(std::size_t first, std::size_t count, unsigned threads,
                     std::vector<TrialOutcome>& out, Fn&& fn) {
  out.assign(count, TrialOutcome{});
  constexpr std::size_t kBlock = 64;
  std::atomic<std::size_t> next{0};
  const auto work = [&](unsigned worker) {
    for (;;) {
      const std::size_t begin = next.fetch_add(kBlock);
      if (begin >= count) return;
      const std::size_t end = std::min(count, begin + kBlock);
      for (std::size_t k = begin; k < end; ++k) out[k] = fn(first + k, worker);
    }
  };
  if (threads <= 1) {
    work(0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  for (auto& t : pool) t.join();
}

inline LogLikelihoodRatio walk_log_likelihood(const WalkMoveRule& hypothesis,
                                              const WalkMoveRule& baseline, std::int64_t start,
                                              std::span<const std::int8_t> w, PlayerId player) {
  LogLikelihoodRatio llr;
  std::int64_t s = start;
  for (std::size_t n = 1; n <= w.size(); ++n) {
    const bool mine = (n - 1) % 2 == player.index;
    if (mine) {
      const std::size_t k = (n + 1) / 2;
      const double ph = hypothesis.up_probability(s, k);
      const double pb = baseline.up_probability(s, k);
      if (w[n - 1] > 0) {
        llr.accumulate(ph, pb);
      } else {
        llr.accumulate(1.0 - ph, 1.0 - pb);
      }
    }
    s += w[n - 1];
  }
  return llr;
}

/// Per-worker state for one experiment.
class TrialRunner {
 public:
  explicit TrialRunner(const ExperimentConfig& cfg)
      : cfg_(cfg), goal_(make_goal(cfg.goal)), actual_(apply_deviations(goal_.profile, cfg.deviations)) {
    if (cfg.blame.id == BlameId::Likelihood) {
      hypothesis_ = apply_deviations(goal_.profile, cfg.blame.hypothesis);
    }
    if (cfg.goal.id == GoalId::RandomWalk) {
      rules_ = {walk_rule_of(actual_, PlayerId{0}), walk_rule_of(actual_, PlayerId{1})};
      base_rules_ = {walk_rule_of(goal_.profile, PlayerId{0}), walk_rule_of(goal_.profile, PlayerId{1})};
      if (hypothesis_.num_players() == 2) {
        hyp_rules_ = {walk_rule_of(hypothesis_, PlayerId{0}), walk_rule_of(hypothesis_, PlayerId{1})};
      }
      if (cfg.blame.id == BlameId::RandomWalk) weights_ = walk_weights(cfg.horizon / 2 + 1);
    }
  }

  const GoalSpec& goal() const noexcept { return goal_; }

  TrialOutcome run(std::size_t trial, std::vector<std::int8_t>& scratch) const {
    CounterRng rng(cfg_.seed, trial);
    return cfg_.goal.id == GoalId::RandomWalk ? run_walk(rng, scratch) : run_generic(rng);
  }

 private:
  TrialOutcome run_generic(CounterRng& rng) const {
    const bool full = cfg_.blame.id == BlameId::AdjacentThreshold &&
                      cfg_.blame.variant == AdjBlameVariant::FullHorizon;
    const auto ep = play_episode(goal_, actual_, cfg_.horizon, rng,
                                 full ? StopRule::FullHorizon : StopRule::AtDetection);
    TrialOutcome out;
    out.missed = !in_target(ep.status, goal_.open_side);
    if (!out.missed) return out;
    PlayerId blamed{0};
    switch (cfg_.blame.id) {
      case BlameId::AdjacentThreshold:
        blamed = full ? adj_blame_full(ep.history, cfg_.goal.mu)
                      : adj_blame(ep.history.prefix(ep.status.length), cfg_.goal.mu);
        break;
      case BlameId::Likelihood:
        blamed = max_likelihood_blame(hypothesis_, goal_.profile,
                                      ep.history.prefix(ep.status.length))
                     .blamed;
        break;
      case BlameId::RandomWalk: throw ConfigError("random_walk blame on a non-walk goal");
    }
    out.blamed = static_cast<std::int8_t>(blamed.index);
    return out;
  }

  TrialOutcome run_walk(CounterRng& rng, std::vector<std::int8_t>& moves) const {
    if (moves.size() < cfg_.horizon) moves.resize(cfg_.horizon);
    const auto run = simulate_walk(cfg_.goal.start, *rules_[0], *rules_[1], cfg_.horizon, rng, moves);
    TrialOutcome out;
    out.missed = !run.reached();
    if (!out.missed) return out;
    const std::span<const std::int8_t> w(moves.data(), cfg_.horizon);
    switch (cfg_.blame.id) {
      case BlameId::RandomWalk: {
        const auto st = compute_walk_statistics(cfg_.goal.start, w, cfg_.blame.thresholds.n0, *weights_);
        const auto d = decide_walk_blame(st, cfg_.blame.thresholds);
        out.blamed = static_cast<std::int8_t>(d.blamed.index);
        out.step = static_cast<std::uint8_t>(d.decided_at_step);
        break;
      }
      case BlameId::Likelihood: {
        std::vector<LogLikelihoodRatio> llrs;
        for (std::size_t i = 0; i < 2; ++i) {
          llrs.push_back(walk_log_likelihood(*hyp_rules_[i], *base_rules_[i], cfg_.goal.start, w,
                                             PlayerId{i}));
        }
        out.blamed = static_cast<std::int8_t>(blame_from_llrs(std::move(llrs)).blamed.index);
        break;
      }
      case BlameId::AdjacentThreshold: throw ConfigError("adjacent_threshold blame on a walk goal");
    }
    return out;
  }

  const ExperimentConfig& cfg_;
  GoalSpec goal_;
  StrategyProfile actual_;
  StrategyProfile hypothesis_;
  std::array<WalkRulePtr, 2> rules_{};
  std::array<WalkRulePtr, 2> base_rules_{};
  std::array<WalkRulePtr, 2> hyp_rules_{};
  std::shared_ptr<const WalkWeights> weights_;
};

}  // namespace detail

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

inline EstimateReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const detail::TrialRunner runner(cfg);
  const std::size_t players = runner.goal().actions.num_players();

  EstimateReport r;
  r.config = cfg;
  r.blamed.assign(players, 0);

  std::vector<std::vector<std::int8_t>> scratch(cfg.threads);
  std::vector<TrialOutcome> batch;
  const std::size_t batch_size =
      cfg.conditioned > 0 ? std::max<std::size_t>(1024, 256 * cfg.threads)
                          : std::max<std::size_t>(1, (cfg.trials + 9) / 10);
  std::size_t next = 0;
  bool done = false;
  while (!done && next < cfg.trials) {
    const std::size_t count = std::min(batch_size, cfg.trials - next);
    detail::parallel_trials(next, count, cfg.threads, batch, [&](std::size_t t, unsigned worker) {
      return runner.run(t, scratch[worker]);
    });
    for (const auto& o : batch) {
      ++r.trials;
      if (!o.missed) {
        ++r.reached;
        continue;
      }
      ++r.missed;
      if (o.blamed >= 0) ++r.blamed[static_cast<std::size_t>(o.blamed)];
      if (o.step > 0) ++r.decided_at_step[o.step];
      if (cfg.conditioned > 0 && r.missed == cfg.conditioned) {
        done = true;
        break;
      }
    }
    next += count;
    if (progress) progress(r.trials, cfg.trials);
  }

  r.p_miss = make_estimate(r.missed, r.trials, cfg.confidence);
  for (std::size_t j = 0; j < players; ++j) {
    r.p_miss_and_blame.push_back(make_estimate(r.blamed[j], r.trials, cfg.confidence));
    r.p_blame_given_miss.push_back(make_estimate(r.blamed[j], r.missed, cfg.confidence));
  }
  const std::size_t early = r.decided_at_step[1] + r.decided_at_step[2] + r.decided_at_step[3];
  r.p_early_decision_given_miss = make_estimate(early, r.missed, cfg.confidence);
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct CalibrationConfig {
  std::int64_t start = rw::kDefaultStart;
  std::size_t horizon = 100000;
  double alpha = 0.01;
  std::size_t trials = 400000;  ///< honest episodes drawn
  std::uint64_t seed = 0;
  std::size_t n0 = rw::kDefaultBurnIn;
  unsigned threads = 1;
  /// Stop drawing once this many missed episodes were collected (0: no cap).
  std::size_t max_conditioned = 0;

  bool operator==(const CalibrationConfig&) const = default;
};

inline constexpr std::size_t kMinCalibrationEpisodes = 100;

struct CalibrationResult {
  SurrogateThresholds thresholds;
  std::size_t episodes = 0;     ///< honest episodes drawn
  std::size_t conditioned = 0;  ///< of which avoided the origin
  double alpha = 0.0;
};

/// Honest-vs-honest episodes conditioned on avoiding the origin by the
/// horizon. Each step's threshold is the empirical (1 - alpha) quantile of
/// that step's statistic maximised over its two tests, so an honest pair
/// triggers each step with frequency about alpha.
inline CalibrationResult calibrate_thresholds(const CalibrationConfig& cfg,
                                              const ProgressFn& progress = {}) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5)) throw InputError("calibration: alpha must lie in (0, 0.5)");
  WalkParams{cfg.start, cfg.horizon, SurrogateThresholds{1.0, 1.0, 0.0, cfg.n0}}.validate();
  if (cfg.horizon / 2 < cfg.n0) throw InputError("calibration: horizon too short for burn-in n0");
  if (cfg.trials < 1 || cfg.threads < 1) throw InputError("calibration: trials and threads must be >= 1");

  const auto weights = walk_weights(cfg.horizon / 2 + 1);
  const FairCoinRule fair;
  struct Sample {
    bool missed = false;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  };
  std::vector<std::vector<std::int8_t>> scratch(cfg.threads, std::vector<std::int8_t>(cfg.horizon));
  std::vector<double> s1, s2, s3;
  CalibrationResult result;
  result.alpha = cfg.alpha;

  const std::size_t batch_size = std::max<std::size_t>(4096, (cfg.trials + 9) / 10);
  std::vector<Sample> batch;
  std::size_t next = 0;
  bool done = false;
  while (!done && next < cfg.trials) {
    const std::size_t count = std::min(batch_size, cfg.trials - next);
    batch.assign(count, Sample{});
    std::atomic<std::size_t> cursor{0};
    const auto work = [&](unsigned worker) {
      auto& moves = scratch[worker];
      for (;;) {
        const std::size_t begin = cursor.fetch_add(64);
        if (begin >= count) return;
        for (std::size_t k = begin; k < std::min(count, begin + 64); ++k) {
          CounterRng rng(cfg.seed, next + k);
          const auto run = simulate_walk(cfg.start, fair, fair, cfg.horizon, rng, moves);
          if (run.reached()) continue;
          const auto st = compute_walk_statistics(cfg.start, moves, cfg.n0, *weights);
          batch[k] = {true, std::max(st.step1[0], st.step1[1]), std::max(st.step2[0], st.step2[1]),
                      std::max(st.step3.t_odd, st.step3.t_even)};
        }
      }
    };
    if (cfg.threads <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < cfg.threads; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (const auto& s : batch) {
      ++result.episodes;
      if (!s.missed) continue;
      s1.push_back(s.s1);
      s2.push_back(s.s2);
      s3.push_back(s.s3);
      if (cfg.max_conditioned > 0 && s1.size() == cfg.max_conditioned) {
        done = true;
        break;
      }
    }
    next += count;
    if (progress) progress(result.episodes, cfg.trials);
  }

  result.conditioned = s1.size();
  if (result.conditioned < kMinCalibrationEpisodes) {
    throw CalibrationError("calibration collected only " + std::to_string(result.conditioned) +
                           " episodes that avoided the origin (need at least " +
                           std::to_string(kMinCalibrationEpisodes) +
                           "); increase trials or the horizon");
  }
  const double q = 1.0 - cfg.alpha;
  result.thresholds = SurrogateThresholds{empirical_quantile(std::move(s1), q),
                                          empirical_quantile(std::move(s2), q),
                                          empirical_quantile(std::move(s3), q), cfg.n0};
  return result;
}

}  // namespace devlab

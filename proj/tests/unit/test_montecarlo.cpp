#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace devlab;
using namespace devlab::testing;

namespace {

constexpr PlayerId A{0};
constexpr PlayerId B{1};

double wilson_hi_k0(double n, double z) { return z * z / (n + z * z); }

TEST(Wilson, ZeroSuccesses) {
  const auto iv = wilson_interval(0, 100, 0.95);
  EXPECT_EQ(iv.lo, 0.0);
  EXPECT_NEAR(iv.hi, wilson_hi_k0(100.0, 1.959963984540054), 1e-12);
  EXPECT_NEAR(iv.hi, 0.0370, 5e-5);
}

TEST(Wilson, AllSuccessesMirror) {
  const auto iv = wilson_interval(100, 100, 0.95);
  EXPECT_EQ(iv.hi, 1.0);
  EXPECT_NEAR(iv.lo, 1.0 - wilson_hi_k0(100.0, 1.959963984540054), 1e-12);
}

TEST(Wilson, HalfSymmetric) {
  const auto iv = wilson_interval(50, 100, 0.95);
  EXPECT_NEAR(iv.lo, 0.404, 5e-4);
  EXPECT_NEAR(iv.hi, 0.596, 5e-4);
  EXPECT_NEAR(iv.lo + iv.hi, 1.0, 1e-15);
}

TEST(Wilson, ContainsPointEstimateAndRejectsBadInput) {
  for (std::size_t n : {1u, 7u, 1000u}) {
    for (std::size_t k = 0; k <= n; k += std::max<std::size_t>(1, n / 10)) {
      const auto iv = wilson_interval(k, n, 0.99);
      EXPECT_TRUE(iv.contains(static_cast<double>(k) / static_cast<double>(n)));
    }
  }
  EXPECT_THROW(wilson_interval(0, 0, 0.95), InputError);
  EXPECT_THROW(wilson_interval(5, 4, 0.95), InputError);
  EXPECT_THROW(wilson_interval(1, 4, 1.0), InputError);
}

TEST(EmpiricalQuantile, InverseEcdf) {
  std::vector<double> x{5, 1, 4, 2, 3};
  EXPECT_EQ(empirical_quantile(x, 0.5), 3.0);
  EXPECT_EQ(empirical_quantile(x, 0.99), 5.0);
  EXPECT_EQ(empirical_quantile(x, 0.2), 1.0);
  EXPECT_EQ(empirical_quantile(x, 0.21), 2.0);
  EXPECT_THROW(empirical_quantile({}, 0.5), InputError);
}

TEST(KahanSum, CompensatesSmallTerms) {
  KahanSum s;
  s += 1.0;
  for (int i = 0; i < 1000000; ++i) s += 1e-16;
  EXPECT_NEAR(s.value(), 1.0 + 1e-10, 1e-15);
}

ExperimentConfig adj_config(std::size_t trials) {
  ExperimentConfig c;
  c.goal = {GoalId::AdjacentOnes, 0.3, 10};
  c.blame.id = BlameId::AdjacentThreshold;
  c.horizon = 40;
  c.trials = trials;
  c.seed = 42;
  return c;
}

TEST(RunExperiment, CountsSumToTrialsAndIntervalsContainEstimates) {
  auto c = adj_config(5000);
  c.deviations = {DeviationSpec::biased(A, 0.5)};
  const auto r = run_experiment(c);
  EXPECT_EQ(r.trials, 5000u);
  EXPECT_EQ(r.reached + r.missed, r.trials);
  EXPECT_EQ(r.blamed[0] + r.blamed[1], r.missed);
  EXPECT_TRUE(r.p_miss.ci.contains(r.p_miss.p));
  for (const auto& e : r.p_miss_and_blame) EXPECT_TRUE(e.ci.contains(e.p));
}

TEST(RunExperiment, SingleTrialIsWellFormed) {
  const auto r = run_experiment(adj_config(1));
  EXPECT_EQ(r.trials, 1u);
  EXPECT_EQ(r.reached + r.missed, 1u);
  EXPECT_LE(r.p_miss.ci.lo, r.p_miss.ci.hi);
}

TEST(RunExperiment, InvalidConfigs) {
  auto c = adj_config(0);
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = adj_config(10);
  c.confidence = 1.0;
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = adj_config(10);
  c.blame.id = BlameId::RandomWalk;
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = adj_config(10);
  c.goal.id = GoalId::RandomWalk;
  c.blame.id = BlameId::AdjacentThreshold;
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(RunExperiment, ThreadCountDoesNotChangeResults) {
  auto c = adj_config(3000);
  c.deviations = {DeviationSpec::always(B, 1)};
  const auto r1 = run_experiment(c);
  c.threads = 4;
  const auto r4 = run_experiment(c);
  EXPECT_EQ(r1.missed, r4.missed);
  EXPECT_EQ(r1.blamed, r4.blamed);
  EXPECT_EQ(r1.p_miss.p, r4.p_miss.p);
}

TEST(RunExperiment, ConditionedStopsAtRequestedMisses) {
  auto c = adj_config(100000);
  c.conditioned = 25;
  c.threads = 3;
  const auto r = run_experiment(c);
  EXPECT_EQ(r.missed, 25u);
  EXPECT_LT(r.trials, 100000u);
  c.threads = 1;
  const auto r1 = run_experiment(c);
  EXPECT_EQ(r1.trials, r.trials);
}

TEST(RunExperiment, HonestMissMatchesOracle) {
  auto c = adj_config(40000);
  c.horizon = 12;
  const auto r = run_experiment(c);
  const double exact = adj_miss_partial(0.3, 6);
  EXPECT_TRUE(wilson_interval(r.missed, r.trials, 0.999).contains(exact)) << r.p_miss.p << " vs " << exact;
}

TEST(RunExperiment, LikelihoodBlameWithTrueHypothesisRespectsBound) {
  // Honest-side guarantee: P(D^c and f != i) <= 2 sqrt(eps) for the true deviation.
  const double mu = 0.3;
  const double eps = adj_miss_probability(mu, 1e-12);
  for (const auto& dev : {DeviationSpec::always(A, 1), DeviationSpec::first_move(B, 1), DeviationSpec::biased(A, 0.8)}) {
    auto c = adj_config(20000);
    c.goal.mu = mu;
    c.deviations = {dev};
    c.blame.id = BlameId::Likelihood;
    c.blame.hypothesis = {dev};
    const auto r = run_experiment(c);
    const std::size_t innocent = 1 - dev.player.index;
    EXPECT_LE(r.p_miss_and_blame[innocent].ci.lo, testability_bound(2, eps));
  }
}

TEST(RunExperiment, WalkWithPointMassDeviatorsUsesDirectSimulator) {
  ExperimentConfig c;
  c.goal = {GoalId::RandomWalk, 0.1, 10};
  c.deviations = {DeviationSpec::always(B, rw::kUp)};
  c.blame.id = BlameId::RandomWalk;
  c.blame.thresholds = {3.0, 10.0, 50.0, 100};
  c.horizon = 2000;
  c.trials = 50;
  c.seed = 1;
  const auto r = run_experiment(c);
  EXPECT_EQ(r.blamed[1] + r.blamed[0], r.missed);
  EXPECT_GT(r.blamed[1], 40u);
}

TEST(RunExperiment, WalkLikelihoodBlame) {
  ExperimentConfig c;
  c.goal = {GoalId::RandomWalk, 0.1, 10};
  c.deviations = {DeviationSpec::reflect_at_one(B)};
  c.blame.id = BlameId::Likelihood;
  c.blame.hypothesis = {DeviationSpec::reflect_at_one(A), DeviationSpec::reflect_at_one(B)};
  c.horizon = 2000;
  c.trials = 200;
  c.seed = 1;
  const auto r = run_experiment(c);
  EXPECT_EQ(r.missed, r.trials);
  EXPECT_GE(r.blamed[1], r.blamed[0]);
}

TEST(CalibrateThresholds, DeterministicAndMonotoneInAlpha) {
  CalibrationConfig c;
  c.horizon = 2000;
  c.trials = 4000;
  c.seed = 5;
  c.alpha = 0.01;
  const auto r1 = calibrate_thresholds(c);
  const auto r2 = calibrate_thresholds(c);
  EXPECT_EQ(r1.thresholds, r2.thresholds);
  EXPECT_GE(r1.conditioned, kMinCalibrationEpisodes);
  c.alpha = 0.4;
  const auto loose = calibrate_thresholds(c);
  EXPECT_LE(loose.thresholds.theta1, r1.thresholds.theta1);
  EXPECT_LE(loose.thresholds.theta2, r1.thresholds.theta2);
  EXPECT_LE(loose.thresholds.theta3, r1.thresholds.theta3);
  c.threads = 3;
  EXPECT_EQ(calibrate_thresholds(c).thresholds, loose.thresholds);
}

TEST(CalibrateThresholds, Errors) {
  CalibrationConfig c;
  c.horizon = 2000;
  c.trials = 100;
  c.alpha = 0.5;
  EXPECT_THROW(calibrate_thresholds(c), InputError);
  c.alpha = 0.01;
  EXPECT_THROW(calibrate_thresholds(c), CalibrationError);
}

TEST(CalibrateThresholds, QuantileLevelIsRespected) {
  // Evaluate fresh honest conditioned episodes against the calibrated
  // thresholds: each step fires with frequency close to alpha.
  CalibrationConfig c;
  c.horizon = 2000;
  c.trials = 20000;
  c.seed = 9;
  c.alpha = 0.1;
  const auto cal = calibrate_thresholds(c);
  ExperimentConfig e;
  e.goal = {GoalId::RandomWalk, 0.1, 10};
  e.blame.id = BlameId::RandomWalk;
  e.blame.thresholds = cal.thresholds;
  e.horizon = 2000;
  e.trials = 20000;
  e.seed = 10;
  const auto r = run_experiment(e);
  const double step1 = static_cast<double>(r.decided_at_step[1]) / static_cast<double>(r.missed);
  EXPECT_NEAR(step1, 0.1, 0.05);
  EXPECT_LT(r.p_early_decision_given_miss.p, 3 * 0.1 + 0.05);
}

}  // namespace

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace devlab;
using namespace devlab::testing;

namespace {

constexpr PlayerId A{0};
constexpr PlayerId B{1};

/// Walk history whose position before the next period (an odd period for
/// A, even for B) equals `s`, reached from start 10.
History walk_history_to(std::int64_t s, bool next_is_b) {
  std::vector<int> w;
  std::int64_t pos = 10;
  while (pos != s || (w.size() % 2 == 1) != next_is_b) {
    const int m = pos < s ? 1 : (pos > s ? -1 : (w.size() % 2 == 0 ? 1 : -1));
    w.push_back(m);
    pos += m;
  }
  return walk_history(w);
}

TEST(BuildDeviation, FirstMoveThenHonestAdjacentOnes) {
  const auto base = adj_honest_strategy({0.1, 100}, A);
  const auto dev = build_deviation(DeviationSpec::first_move(A, 1), base);
  EXPECT_EQ(action_distribution(*dev, A, History(2))[1], 1.0);
  for (std::size_t len : {2u, 4u, 10u}) {
    const auto h = adj_history(std::vector<int>(len, 0));
    EXPECT_EQ(action_distribution(*dev, A, h), action_distribution(*base, A, h));
  }
  // Off-turn periods stay on the null action.
  EXPECT_EQ(action_distribution(*dev, A, adj_history({1}))[0], 1.0);
}

TEST(BuildDeviation, HonestSpecEqualsBaseline) {
  const auto base = adj_honest_strategy({0.3, 100}, B);
  const auto dev = build_deviation(DeviationSpec::honest(B), base);
  CounterRng rng(2, 0);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> bits(static_cast<std::size_t>(rng.uniform() * 30));
    for (auto& b : bits) b = rng.uniform() < 0.5;
    const auto h = adj_history(bits);
    EXPECT_EQ(action_distribution(*dev, B, h), action_distribution(*base, B, h));
  }
}

TEST(BuildDeviation, PinToBandSteersDownFromFive) {
  const auto base = rw_honest_strategy(B);
  const auto dev = build_deviation(DeviationSpec::pin_to_band(B, 1, 3), base);
  const auto h = walk_history_to(5, true);
  ASSERT_EQ(rw_position(h, 10), 5);
  const auto d = action_distribution(*dev, B, h);
  EXPECT_EQ(d[rw::kDown], 1.0);
}

TEST(BuildDeviation, PinToBandKeepsWalkInsideBandFromBothParities) {
  const auto base = rw_honest_strategy(B);
  const auto dev = build_deviation(DeviationSpec::pin_to_band(B, 1, 3), base);
  EXPECT_EQ(action_distribution(*dev, B, walk_history_to(1, true))[rw::kUp], 1.0);
  EXPECT_EQ(action_distribution(*dev, B, walk_history_to(3, true))[rw::kDown], 1.0);
  const auto band = build_deviation(DeviationSpec::pin_to_band(B, 1, 5), base);
  EXPECT_EQ(action_distribution(*band, B, walk_history_to(3, true))[rw::kUp], 0.5);
}

TEST(BuildDeviation, ReflectAtOne) {
  const auto base = rw_honest_strategy(A);
  const auto dev = build_deviation(DeviationSpec::reflect_at_one(A), base);
  // From start 10, A always moves from an even position; start at 9 so
  // that A faces s = 1.
  const auto goal = random_walk_goal(9);
  const auto dev9 = build_deviation(DeviationSpec::reflect_at_one(A), goal.profile.ptr(A));
  std::vector<int> w(8, -1);  // 9 -> 1 after 8 moves, next period is odd
  const auto h = walk_history(w);
  ASSERT_EQ(rw_position(h, 9), 1);
  EXPECT_EQ(action_distribution(*dev9, A, h)[rw::kUp], 1.0);
  EXPECT_EQ(action_distribution(*dev, A, walk_history({-1, -1}))[rw::kUp], 0.5);
}

TEST(BuildDeviation, DriftUpAndBiased) {
  const auto base = rw_honest_strategy(A);
  const auto drift = build_deviation(DeviationSpec::drift_up(A, 0.2), base);
  EXPECT_NEAR(action_distribution(*drift, A, History(2))[rw::kUp], 0.6, 1e-15);
  const auto biased = build_deviation(DeviationSpec::biased(A, 0.9), base);
  EXPECT_NEAR(action_distribution(*biased, A, History(2))[rw::kUp], 0.9, 1e-15);
  const auto bbit = build_deviation(DeviationSpec::biased(A, 0.7), adj_honest_strategy({0.1, 10}, A));
  EXPECT_NEAR(action_distribution(*bbit, A, History(2))[1], 0.7, 1e-15);
  EXPECT_EQ(action_distribution(*bbit, A, adj_history({1}))[0], 1.0);
}

TEST(BuildDeviation, SpecErrors) {
  const auto adj = adj_honest_strategy({0.1, 10}, A);
  EXPECT_THROW(build_deviation(DeviationSpec::biased(A, 1.5), adj), InputError);
  EXPECT_THROW(build_deviation(DeviationSpec::pin_to_band(A, 0, 3), rw_honest_strategy(A)), InputError);
  EXPECT_THROW(build_deviation(DeviationSpec::pin_to_band(A, 4, 3), rw_honest_strategy(A)), InputError);
  EXPECT_THROW(build_deviation(DeviationSpec::pin_to_band(A, 1, 3), adj), InputError);
  EXPECT_THROW(build_deviation(DeviationSpec::always(A, 5), adj), InputError);
  EXPECT_THROW(build_deviation(DeviationSpec::always(B, 1), adj), InputError);
  EXPECT_THROW(build_deviation(DeviationSpec::always(A, rw::kNull), rw_honest_strategy(A)), InputError);
}

TEST(BuildDeviation, AllKindsProduceValidDistributions) {
  const std::vector<DeviationSpec> walk_specs{
      DeviationSpec::honest(B),         DeviationSpec::always(B, rw::kUp), DeviationSpec::first_move(B, rw::kDown),
      DeviationSpec::biased(B, 0.3),    DeviationSpec::pin_to_band(B, 2, 6), DeviationSpec::drift_up(B, 0.1),
      DeviationSpec::reflect_at_one(B)};
  CounterRng rng(9, 0);
  for (const auto& spec : walk_specs) {
    const auto dev = build_deviation(spec, rw_honest_strategy(B));
    for (int t = 0; t < 50; ++t) {
      std::vector<int> w(static_cast<std::size_t>(rng.uniform() * 40));
      for (auto& m : w) m = rng.uniform() < 0.5 ? 1 : -1;
      const auto d = action_distribution(*dev, B, walk_history(w));
      double total = 0.0;
      for (double x : d) {
        EXPECT_GE(x, 0.0);
        total += x;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      if (w.size() % 2 == 0) {
        EXPECT_EQ(d[rw::kNull], 1.0);
      }
    }
  }
}

TEST(Deviations, PinToBandAndReflectGuaranteeAvoidingOrigin) {
  const auto goal = random_walk_goal();
  for (const auto& spec : {DeviationSpec::pin_to_band(B, 1, 3), DeviationSpec::reflect_at_one(B)}) {
    const std::vector<DeviationSpec> devs{spec};
    const auto actual = apply_deviations(goal.profile, devs);
    for (std::uint64_t t = 0; t < 100; ++t) {
      CounterRng rng(3, t);
      const auto ep = play_episode(goal, actual, 400, rng);
      EXPECT_EQ(ep.status.kind, EpisodeStatus::Kind::Undetermined);
    }
  }
}

TEST(DeviationSpec, KindNames) {
  EXPECT_STREQ(to_string(DeviationSpec::Kind::PinToBand), "pin_to_band");
  EXPECT_STREQ(to_string(DeviationSpec::Kind::FirstMoveThenHonest), "first_move_then_honest");
}

}  // namespace

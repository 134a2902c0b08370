#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"

using namespace devlab;
using namespace devlab::testing;

namespace {

constexpr PlayerId A{0};
constexpr PlayerId B{1};
const double kInf = std::numeric_limits<double>::infinity();

TEST(LogLikelihoodRatio, HonestPlayerIsZero) {
  const auto s = fair_bit();
  for (const auto& h : all_binary_histories(2, 4)) {
    EXPECT_EQ(log_likelihood_ratio(*s, *s, A, h), LogLikelihoodRatio::finite(0.0));
  }
}

TEST(LogLikelihoodRatio, AlwaysOneAgainstFairCoin) {
  const auto h = History::from_profiles(2, {{1, 0}, {1, 1}, {1, 0}});
  const auto llr = log_likelihood_ratio(*always_bit(1), *fair_bit(), A, h);
  EXPECT_EQ(llr.kind(), LogLikelihoodRatio::Kind::Finite);
  EXPECT_NEAR(llr.value(), 3.0 * std::log(2.0), 1e-15);
}

TEST(LogLikelihoodRatio, ImpossibleUnderDeviationIsMinusInfinity) {
  const auto h = History::from_profiles(2, {{1, 0}, {0, 1}, {1, 0}});
  const auto llr = log_likelihood_ratio(*always_bit(1), *fair_bit(), A, h);
  EXPECT_EQ(llr, LogLikelihoodRatio::minus_infinity());
  EXPECT_EQ(llr.value(), -kInf);
}

TEST(LogLikelihoodRatio, ImpossibleUnderBaselineIsPlusInfinity) {
  const auto h = History::from_profiles(2, {{1, 0}});
  const auto llr = log_likelihood_ratio(*fair_bit(), *always_bit(0), A, h);
  EXPECT_EQ(llr, LogLikelihoodRatio::plus_infinity());
}

TEST(LogLikelihoodRatio, ZeroOverZeroContributesNothing) {
  LogLikelihoodRatio l;
  l.accumulate(0.0, 0.0);
  EXPECT_EQ(l, LogLikelihoodRatio::finite(0.0));
  l.accumulate(0.5, 0.25);
  EXPECT_NEAR(l.value(), std::log(2.0), 1e-15);
}

TEST(LogLikelihoodRatio, MinusInfinityAbsorbsPlusInfinity) {
  LogLikelihoodRatio l;
  l.accumulate(1.0, 0.0);
  EXPECT_EQ(l, LogLikelihoodRatio::plus_infinity());
  l.accumulate(0.0, 1.0);
  EXPECT_EQ(l, LogLikelihoodRatio::minus_infinity());
  l.accumulate(1.0, 0.0);
  EXPECT_EQ(l, LogLikelihoodRatio::minus_infinity());
}

TEST(LogLikelihoodRatio, LongPrefixDoesNotUnderflow) {
  LogLikelihoodRatio l;
  for (int i = 0; i < 1000000; ++i) l.accumulate(0.25, 0.5);
  EXPECT_EQ(l.kind(), LogLikelihoodRatio::Kind::Finite);
  EXPECT_NEAR(l.value(), -1e6 * std::log(2.0), 1e-3);
}

TEST(LogLikelihoodRatio, StreamingMatchesBatch) {
  const auto dev = biased_bit(0.8);
  const auto base = biased_bit(0.3);
  CounterRng rng(4, 0);
  History h(2);
  LikelihoodAccumulator acc(*dev, *base, B);
  for (int n = 0; n < 200; ++n) {
    const Action a = rng.uniform() < 0.5 ? 1 : 0;
    acc.observe(h, a);
    h.push({Action{0}, a});
    EXPECT_EQ(acc.value(), log_likelihood_ratio(*dev, *base, B, h));
  }
}

TEST(MaxLikelihoodBlame, AlwaysOneHypothesisBlamesA) {
  const StrategyProfile base({fair_bit(), fair_bit()});
  const StrategyProfile hyp({always_bit(1), fair_bit()});
  const auto h = History::from_profiles(2, {{1, 0}, {1, 1}});
  const auto v = max_likelihood_blame(hyp, base, h);
  EXPECT_EQ(v.blamed, A);
  EXPECT_FALSE(v.tie);
  EXPECT_NEAR(v.per_player_llr[0].value(), 2.0 * std::log(2.0), 1e-15);
  EXPECT_EQ(v.per_player_llr[1].value(), 0.0);
}

TEST(MaxLikelihoodBlame, TotalTieBlamesLowestIndex) {
  const StrategyProfile base({fair_bit(), fair_bit()});
  const auto v = max_likelihood_blame(base, base, History::from_profiles(2, {{1, 1}}));
  EXPECT_EQ(v.blamed, A);
  EXPECT_TRUE(v.tie);
}

TEST(MaxLikelihoodBlame, MinusInfinityLoses) {
  const StrategyProfile base({fair_bit(), fair_bit()});
  const StrategyProfile hyp({always_bit(1), always_bit(1)});
  const auto h = History::from_profiles(2, {{1, 1}, {1, 0}});
  const auto v = max_likelihood_blame(hyp, base, h);
  EXPECT_EQ(v.blamed, A);
  EXPECT_EQ(v.per_player_llr[1], LogLikelihoodRatio::minus_infinity());
  EXPECT_FALSE(v.tie);
}

TEST(MaxLikelihoodBlame, AllPlusInfiniteIsFlagged) {
  const StrategyProfile base({always_bit(0), always_bit(0)});
  const StrategyProfile hyp({always_bit(1), always_bit(1)});
  const auto v = max_likelihood_blame(hyp, base, History::from_profiles(2, {{1, 1}}));
  EXPECT_EQ(v.blamed, A);
  EXPECT_TRUE(v.tie);
  EXPECT_TRUE(v.all_plus_infinite);
}

TEST(BlameFromLlrs, ArgmaxInvariantUnderCommonShift) {
  CounterRng rng(8, 0);
  for (int t = 0; t < 500; ++t) {
    std::vector<LogLikelihoodRatio> llrs;
    for (int i = 0; i < 4; ++i) {
      const double u = rng.uniform();
      if (u < 0.1) {
        llrs.push_back(LogLikelihoodRatio::minus_infinity());
      } else if (u < 0.15) {
        llrs.push_back(LogLikelihoodRatio::plus_infinity());
      } else {
        llrs.push_back(LogLikelihoodRatio::finite(std::floor(rng.uniform() * 5.0)));
      }
    }
    const double c = rng.uniform() * 100.0 - 50.0;
    std::vector<LogLikelihoodRatio> shifted;
    for (const auto& l : llrs) shifted.push_back(l.shifted(c));
    const auto v1 = blame_from_llrs(llrs);
    const auto v2 = blame_from_llrs(shifted);
    EXPECT_EQ(v1.blamed, v2.blamed);
  }
}

TEST(Factorization, UnilateralAndPairwiseIdentitiesOnAllShortPrefixes) {
  const StrategyProfile base({biased_bit(0.3), biased_bit(0.6)});
  const StrategyProfile hyp({biased_bit(0.9), biased_bit(0.2)});
  const StrategyProfile dev_a = base.with(A, hyp.ptr(A));
  const StrategyProfile dev_b = base.with(B, hyp.ptr(B));
  for (std::size_t n = 0; n <= 8; ++n) {
    for (const auto& z : all_binary_histories(2, n)) {
      const double p = prefix_probability(base, z);
      const double la = log_likelihood_ratio(hyp[A], base[A], A, z).value();
      const double lb = log_likelihood_ratio(hyp[B], base[B], B, z).value();
      EXPECT_NEAR(prefix_probability(dev_a, z), std::exp(la) * p, 1e-9 * prefix_probability(dev_a, z));
      EXPECT_NEAR(prefix_probability(dev_b, z), std::exp(lb) * p, 1e-9 * prefix_probability(dev_b, z));
      EXPECT_NEAR(prefix_probability(hyp, z), std::exp(la + lb) * p, 1e-9 * prefix_probability(hyp, z));
    }
  }
}

TEST(TestabilityBound, Examples) {
  EXPECT_NEAR(testability_bound(2, 0.01), 0.2, 1e-15);
  EXPECT_EQ(testability_bound(2, 0.0), 0.0);
  EXPECT_NEAR(testability_bound(5, 0.04), 0.8, 1e-15);
  EXPECT_NEAR(likelihood_response_bound(2, 0.01), 0.1, 1e-15);
  EXPECT_THROW(testability_bound(1, 0.1), InputError);
  EXPECT_THROW(testability_bound(2, 1.5), InputError);
}

}  // namespace

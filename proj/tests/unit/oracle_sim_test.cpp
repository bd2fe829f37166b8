#include <cmath>

#include <gtest/gtest.h>

#include <stopwise/errors.hpp>
#include <stopwise/house_selling.hpp>
#include <stopwise/oracle.hpp>
#include <stopwise/rng.hpp>

#include "generators.hpp"

namespace stopwise {
namespace {

HouseModel known_half(double x0, int horizon) {
  HouseModel m;
  m.prior = DiscretePosterior({0.5}, {1.0}, BernoulliOffers{});
  m.cost = 0.1;
  m.utility = Utility::linear();
  m.horizon = horizon;
  m.initial_offer = x0;
  return m;
}

TEST(BruteForceHouse, HorizonZeroHasOneRule) {
  const BruteForceReport r = brute_force_house(known_half(0.3, 0));
  EXPECT_EQ(r.value, 0.3);
  EXPECT_EQ(r.rules_examined, 1u);
  EXPECT_EQ(r.paths, 1u);
  EXPECT_THROW(brute_force_house(known_half(0.3, 0), {}, true), InvalidArgument);
}

TEST(BruteForceHouse, OneStepKnownCoin) {
  EXPECT_NEAR(brute_force_house(known_half(0.0, 1)).value, 0.4, 1e-15);
  const BruteForceReport stop = brute_force_house(known_half(1.0, 1));
  EXPECT_EQ(stop.value, 1.0);
  EXPECT_TRUE(stop.rule.at({}));
  EXPECT_EQ(stop.paths, 2u);
}

TEST(BruteForceHouse, DecompositionAgreesWithEnumeration) {
  testing::Rng rng(11);
  BruteForceOptions decompose;
  decompose.max_exhaustive_nodes = 0;
  for (int i = 0; i < 20; ++i) {
    const HouseModel m = testing::random_house(rng, 3);
    const BruteForceReport full = brute_force_house(m);
    const BruteForceReport fast = brute_force_house(m, decompose);
    EXPECT_NEAR(full.value, fast.value, 1e-14);
    EXPECT_FALSE(fast.exhaustive);
    EXPECT_NEAR(rule_value(m, fast.rule), fast.value, 1e-14);
  }
}

TEST(BruteForceHouse, OptimumDominatesSampledRules) {
  testing::Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const HouseModel m = testing::random_house(rng, 3);
    const BruteForceReport best = brute_force_house(m);
    for (int j = 0; j < 20; ++j) {
      StoppingRule rule;
      for (const auto& [h, stop] : best.rule) rule[h] = testing::uniform(rng, 0.0, 1.0) < 0.5;
      EXPECT_LE(rule_value(m, rule), best.value + 1e-14);
    }
  }
}

TEST(BruteForceHouse, PathBudget) {
  BruteForceOptions small;
  small.max_paths = 10;
  EXPECT_THROW(brute_force_house(figure1_model(-1.0), small), BudgetExceeded);
}

TEST(BruteForceValue, PathBudget) {
  testing::Rng rng(2);
  PartiallyObservableModel m = testing::random_pomdp(rng);
  while (m.nx() < 2) m = testing::random_pomdp(rng);
  BruteForceOptions small;
  small.max_paths = 1;
  EXPECT_THROW(brute_force_value(m, Utility::linear(), 3, small), BudgetExceeded);
}

TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5U, 0xe169c58dU, 0xbc57ac4cU, 0x9b00dbd8U}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffffU, 0xffffffffU, 0xffffffffU, 0xffffffffU}, {0xffffffffU, 0xffffffffU}),
            (C{0x408f276dU, 0x41c83b0eU, 0xa20bc7c6U, 0x6d5451fdU}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U}, {0xa4093822U, 0x299f31d0U}),
            (C{0xd16cfe09U, 0x94fdcceb, 0x5001e420U, 0x24126ea1U}));
}

TEST(Philox, StreamsAreDistinctAndUniformInRange) {
  PhiloxStream a(42, 0), b(42, 1), a2(42, 0);
  int equal = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a.next_double();
    EXPECT_EQ(x, a2.next_double());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    equal += x == b.next_double();
  }
  EXPECT_EQ(equal, 0);
}

TEST(MonteCarlo, DeterministicAndThreadInvariant) {
  ReservationSolver solver(figure1_model(-1.0));
  McOptions opts;
  opts.samples = 20'000;
  opts.seed = 7;
  opts.threads = 1;
  const McEstimate one = monte_carlo_eval(solver, opts);
  opts.threads = 4;
  const McEstimate four = monte_carlo_eval(solver, opts);
  EXPECT_EQ(one.mean, four.mean);
  EXPECT_EQ(one.std_error, four.std_error);
  EXPECT_EQ(one.count, 20'000u);
  opts.seed = 8;
  EXPECT_NE(monte_carlo_eval(solver, opts).mean, one.mean);
}

TEST(MonteCarlo, ConcordantWithExactValue) {
  for (double gamma : {-2.0, -0.5}) {
    ReservationSolver solver(figure1_model(gamma));
    McOptions opts;
    opts.samples = 100'000;
    opts.seed = 1;
    const McEstimate est = monte_carlo_eval(solver, opts);
    EXPECT_LT(std::abs(est.mean - policy_value(solver)), 4.0 * est.std_error) << gamma;
  }
}

TEST(MonteCarlo, DegenerateLawHasNoError) {
  ReservationSolver solver(known_half(1.0, 3));
  McOptions opts;
  opts.samples = 1000;
  const McEstimate est = monte_carlo_eval(solver, opts);
  EXPECT_EQ(est.mean, 1.0);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(MonteCarlo, RejectsZeroSamples) {
  ReservationSolver solver(known_half(0.0, 1));
  McOptions opts;
  opts.samples = 0;
  EXPECT_THROW(monte_carlo_eval(solver, opts), InvalidArgument);
}

TEST(MonteCarlo, InfiniteHorizonStageCap) {
  // Level 1 - c/p = 0.999 rejects zeros, and a one arrives with probability 0.001.
  HouseModel m;
  m.prior = DiscretePosterior({0.001}, {1.0}, BernoulliOffers{});
  m.horizon.reset();
  m.utility = Utility::linear();
  m.cost = 1e-6;
  ReservationSolver solver(m);
  McOptions opts;
  opts.samples = 1;
  opts.seed = 3;
  opts.max_stages = 5;
  EXPECT_THROW(monte_carlo_eval(solver, opts), BudgetExceeded);
}

TEST(MonteCarlo, FiniteModelPolicyMatchesDp) {
  testing::Rng rng(17);
  for (int i = 0; i < 5; ++i) {
    const PartiallyObservableModel m = testing::random_pomdp(rng);
    const Utility u = Utility::exponential(-0.7);
    const SolveResult dp = value_iteration(m, u, 3);
    McOptions opts;
    opts.samples = 50'000;
    opts.seed = static_cast<std::uint64_t>(i);
    const McEstimate est = monte_carlo_eval(m, u, dp.policy, opts);
    EXPECT_LE(std::abs(est.mean - dp.report.value), 4.0 * est.std_error + 1e-12) << i;
  }
}

}  // namespace
}  // namespace stopwise

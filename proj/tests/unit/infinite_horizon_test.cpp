#include <cmath>

#include <gtest/gtest.h>

#include <stopwise/errors.hpp>
#include <stopwise/house_selling.hpp>

#include "oracles.hpp"

namespace stopwise {
namespace {

HouseModel infinite_bernoulli(const Belief& prior, const Utility& u, double cost = 0.1) {
  HouseModel m;
  m.prior = prior;
  m.utility = u;
  m.cost = cost;
  m.horizon.reset();
  return m;
}

TEST(InfiniteHorizon, CertainOfferOfOne) {
  for (double gamma : {-3.0, -1.0, -0.1}) {
    const HouseModel m = infinite_bernoulli(DiscretePosterior({1.0}, {1.0}, BernoulliOffers{}), Utility::exponential(gamma));
    ReservationSolver solver(m);
    EXPECT_NEAR(solver.level(0, m.prior), 0.9, 1e-10) << gamma;
  }
}

TEST(InfiniteHorizon, KnownHalfMatchesFixedPointOracle) {
  const HouseModel m = infinite_bernoulli(DiscretePosterior({0.5}, {1.0}, BernoulliOffers{}), Utility::exponential(-1.0));
  ReservationSolver solver(m);
  const InfiniteLevel lvl = solver.level_infinite(0, m.prior);
  const double want = double(testing::known_bernoulli_fixed_point(-1.0, 0.1, 0.5));
  EXPECT_NEAR(lvl.level, want, 1e-9);
  EXPECT_LT(lvl.residual, 1e-9);
  const DiscreteDist coin({0.0, 1.0}, {0.5, 0.5});
  EXPECT_NEAR(exp_fixed_point_known(-1.0, 0.1, coin), want, 1e-12);
  EXPECT_LT(exp_fixed_point_residual(-1.0, 0.1, coin, want), 1e-12);
}

TEST(InfiniteHorizon, FiniteLevelsConvergeFromBelow) {
  for (const Utility& u : {Utility::exponential(-1.0), Utility::log(10.0)}) {
    HouseModel m = infinite_bernoulli(BetaBernoulli(1, 1), u);
    ReservationSolver inf(m);
    const double limit = inf.level_infinite(0, m.prior).level;
    m.horizon = 40;
    ReservationSolver fin(m);
    double prev = kNoLevel;
    for (int n = 1; n <= 40; ++n) {
      const double x = fin.level_finite(0, n, m.prior);
      EXPECT_GE(x, prev - 1e-12);
      EXPECT_LE(x, limit + 1e-9);
      prev = x;
    }
    EXPECT_NEAR(prev, limit, 1e-3) << u.describe();
  }
}

TEST(InfiniteHorizon, UniformPriorLevels) {
  // Reference values: the finite recursion at N = 200 in long double.
  const HouseModel lin = infinite_bernoulli(BetaBernoulli(1, 1), Utility::linear());
  EXPECT_NEAR(ReservationSolver(lin).level(0, lin.prior), 0.6171031746031745, 1e-9);
  const HouseModel exp = infinite_bernoulli(BetaBernoulli(1, 1), Utility::exponential(-1.0));
  EXPECT_NEAR(ReservationSolver(exp).level(0, exp.prior), 0.44316658881624166, 1e-9);
}

TEST(InfiniteHorizon, TableRowsAndConvergenceFailure) {
  const HouseModel m = infinite_bernoulli(BetaBernoulli(1, 1), Utility::exponential(-1.0));
  const ReservationTable t = reservation_level_infinite(m, {}, 2);
  EXPECT_FALSE(t.horizon.has_value());
  EXPECT_EQ(t.rows.size(), 1u + 2u + 3u);
  EXPECT_LT(t.last_increment, 1e-10);
  EXPECT_GT(t.iterations, 1);

  InfiniteOptions tight;
  tight.max_iterations = 2;
  try {
    reservation_level_infinite(m, tight, 1);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_increment(), 0.0);
  }
}

TEST(InfiniteHorizon, ContinuousOffersRejected) {
  HouseModel m;
  m.offers = ExponentialMeanOffers{};
  m.prior = InvGammaExp(3, 2);
  m.horizon.reset();
  EXPECT_THROW(ReservationSolver{m}, InvalidArgument);
}

}  // namespace
}  // namespace stopwise

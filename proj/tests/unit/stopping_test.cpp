#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include <stopwise/errors.hpp>
#include <stopwise/oracle.hpp>
#include <stopwise/stopping.hpp>

#include "generators.hpp"

namespace stopwise {
namespace {

/// Static hidden quality y in {bad, good}; observations lo/hi with
/// P(hi | good) = 0.7, P(hi | bad) = 0.3.
PartiallyObservableModel quality_model(double cost = -0.1) {
  PartiallyObservableModel m;
  m.observable_labels = {"lo", "hi"};
  m.hidden_labels = {"bad", "good"};
  const double p_hi[2] = {0.3, 0.7};
  m.q.assign(2, std::vector<std::vector<std::vector<double>>>(2, std::vector<std::vector<double>>(2, {0.0, 0.0})));
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      m.q[x][y][1][y] = p_hi[y];
      m.q[x][y][0][y] = 1.0 - p_hi[y];
    }
  }
  m.running_reward = {cost, cost};
  m.stopping_reward = {0.0, 1.0};
  m.prior = {0.5, 0.5};
  m.x0 = 0;
  return m;
}

TEST(ModelValidation, RejectsBadTensors) {
  PartiallyObservableModel m = quality_model();
  m.q[0][0][0][0] += 0.1;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = quality_model();
  m.prior = {0.5, 0.6};
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = quality_model();
  m.x0 = 2;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = quality_model();
  m.stopping_reward.pop_back();
  EXPECT_THROW(m.validate(), InvalidArgument);
  EXPECT_NO_THROW(quality_model().validate());
}

TEST(ModelValidation, StrictlyNegativeCostFlag) {
  EXPECT_TRUE(quality_model(-0.1).strictly_negative_cost());
  EXPECT_FALSE(quality_model(0.0).strictly_negative_cost());
}

TEST(MarginalKernel, SingleHiddenStateIsObservableMarginal) {
  testing::Rng rng(7);
  PartiallyObservableModel m = testing::random_pomdp(rng, 3, 1);
  while (m.ny() != 1) m = testing::random_pomdp(rng, 3, 1);
  const auto k = marginal_kernel(m);
  for (std::size_t x = 0; x < m.nx(); ++x) {
    for (std::size_t x2 = 0; x2 < m.nx(); ++x2) EXPECT_EQ(k[x][0][x2], m.q[x][0][x2][0]);
  }
}

TEST(MarginalKernel, SumsOverHiddenTarget) {
  PartiallyObservableModel m = quality_model();
  // Spread each entry uniformly over both y'.
  for (auto& a : m.q) {
    for (auto& b : a) {
      for (auto& c : b) {
        const double s = c[0] + c[1];
        c = {s / 2.0, s / 2.0};
      }
    }
  }
  const auto k = marginal_kernel(m);
  EXPECT_NEAR(k[0][1][1], 2.0 * m.q[0][1][1][0], 1e-15);
  EXPECT_NEAR(k[0][0][0], 2.0 * m.q[0][0][0][1], 1e-15);
}

TEST(MarginalKernel, RowsSumToOne) {
  testing::Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const PartiallyObservableModel m = testing::random_pomdp(rng);
    for (const auto& per_x : marginal_kernel(m)) {
      for (const auto& row : per_x) {
        double s = 0.0;
        for (double v : row) s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
    }
  }
}

TEST(Filter, QualityModelPosterior) {
  const PartiallyObservableModel m = quality_model();
  const std::vector<double> mu = filter_update(m, 0, 1, m.prior);
  EXPECT_NEAR(mu[1], 0.7, 1e-15);
  const std::vector<double> law = observation_law(m, 0, mu);
  EXPECT_NEAR(law[1], 0.3 * 0.3 + 0.7 * 0.7, 1e-15);
}

TEST(Filter, ImpossibleObservationThrows) {
  PartiallyObservableModel m = quality_model();
  for (int x = 0; x < 2; ++x) {
    m.q[x][1][0][1] = 0.0;
    m.q[x][1][1][1] = 1.0;
  }
  EXPECT_THROW(filter_update(m, 0, 0, {0.0, 1.0}), ImpossibleObservation);
}

TEST(ValueIteration, HorizonZeroStopsImmediately) {
  const PartiallyObservableModel m = quality_model();
  const Utility u = Utility::exponential(-1.0);
  const SolveResult r = value_iteration(m, u, 0);
  EXPECT_EQ(r.report.value, u(m.stopping_reward[m.x0]));
  EXPECT_TRUE(r.policy.root().stop);
  EXPECT_EQ(r.policy.nodes.size(), 1u);
}

TEST(ValueIteration, DominatingCostStopsAtOnce) {
  PartiallyObservableModel m = quality_model(-100.0);
  m.x0 = 1;
  const Utility u = Utility::exponential(-1.0);
  const SolveResult r = value_iteration(m, u, 3);
  EXPECT_TRUE(r.policy.root().stop);
  EXPECT_EQ(r.report.value, u(1.0));
  for (const std::vector<int>& h : {std::vector<int>{1}, {1, 0, 0, 1}, {1, 1, 1}}) {
    EXPECT_EQ(extract_stopping_time(r.policy, h), 0);
  }
}

TEST(ValueIteration, MatchesBruteForceOnQualityModel) {
  const PartiallyObservableModel m = quality_model();
  for (int n = 0; n <= 3; ++n) {
    for (const Utility& u : {Utility::linear(), Utility::exponential(-2.0), Utility::log(1.0)}) {
      EXPECT_NEAR(value_iteration(m, u, n).report.value, brute_force_value(m, u, n).value, 1e-12);
    }
  }
}

TEST(ValueIteration, NodeInvariants) {
  const SolveResult r = value_iteration(quality_model(), Utility::exponential(-0.5), 4);
  for (const PolicyNode& node : r.policy.nodes) {
    EXPECT_GE(node.value, node.stop_value);
    EXPECT_EQ(node.stop, node.stop_value >= node.continuation_value);
    if (node.stage == r.policy.horizon) EXPECT_TRUE(std::isinf(node.continuation_value));
  }
  ASSERT_EQ(r.report.per_stage.size(), 5u);
  EXPECT_EQ(r.report.per_stage[0].size(), 1u);
  EXPECT_EQ(r.report.node_count, r.policy.nodes.size());
}

TEST(ValueIteration, TreeBeliefsEqualStepwiseFilter) {
  testing::Rng rng(23);
  for (int i = 0; i < 10; ++i) {
    const PartiallyObservableModel m = testing::random_pomdp(rng);
    const SolveResult r = value_iteration(m, Utility::linear(), 3);
    std::function<void(std::size_t, const std::vector<double>&)> walk = [&](std::size_t id,
                                                                            const std::vector<double>& mu) {
      const PolicyNode& node = r.policy.nodes[id];
      for (std::size_t y = 0; y < mu.size(); ++y) EXPECT_NEAR(node.state.mu[y], mu[y], 1e-12);
      for (const PolicyChild& c : node.children) walk(c.node, filter_update(m, node.state.x, c.x, mu));
    };
    walk(0, m.prior);
  }
}

TEST(ValueIteration, DomainErrorForWealthOutsideUtility) {
  PartiallyObservableModel m = quality_model(-1.0);
  EXPECT_THROW(value_iteration(m, Utility::log(0.0), 2), DomainError);
}

TEST(ValueIteration, NodeBudgetEnforced) {
  testing::Rng rng(5);
  PartiallyObservableModel m = testing::random_pomdp(rng, 3, 3);
  while (m.nx() < 3) m = testing::random_pomdp(rng, 3, 3);
  SolveOptions opts;
  opts.node_budget = 10;
  EXPECT_THROW(value_iteration(m, Utility::linear(), 6, opts), BudgetExceeded);
}

TEST(ValueIteration, NegativeHorizonRejected) {
  EXPECT_THROW(value_iteration(quality_model(), Utility::linear(), -1), InvalidArgument);
}

TEST(ExpValueIteration, BaseCaseAndFactorization) {
  const PartiallyObservableModel m = quality_model();
  const double gamma = -1.5;
  const HTable h0 = exp_value_iteration(m, gamma, 0);
  EXPECT_NEAR(h0.root_value(), std::exp(gamma * m.stopping_reward[m.x0]) / gamma, 1e-15);

  const HTable h = exp_value_iteration(m, gamma, 4);
  const SolveResult r = value_iteration(m, Utility::exponential(gamma), 4);
  EXPECT_NEAR(h.root_value(), r.report.value, 1e-12);

  AugState root{m.x0, m.prior, 1.0};
  const SolveResult shifted = value_iteration_from(m, Utility::exponential(gamma), 4, root);
  EXPECT_NEAR(shifted.report.value, std::exp(gamma) * h.root_value(), 1e-12);
}

TEST(ExpValueIteration, DecisionsMatchGeneralRecursion) {
  testing::Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const PartiallyObservableModel m = testing::random_pomdp(rng);
    const double gamma = testing::uniform(rng, -2.0, -0.1);
    const HTable h = exp_value_iteration(m, gamma, 3);
    ValueEvaluator ev(m, Utility::exponential(gamma));
    for (const HNode& node : h.nodes) {
      const AugState st{node.x, node.mu, testing::uniform(rng, -2.0, 2.0)};
      EXPECT_NEAR(std::exp(gamma * st.s) * node.h, ev.value(3 - node.stage, st), 1e-12);
      if (node.stage < 3) {
        const bool stop = ev.stop_value(st) >= ev.continuation_value(3 - node.stage, st);
        // Decisions agree except on exact numerical ties.
        if (std::abs(ev.stop_value(st) - ev.continuation_value(3 - node.stage, st)) > 1e-12) {
          EXPECT_EQ(node.stop, stop);
        }
      }
    }
  }
}

TEST(ExtractStoppingTime, CappedAtHorizon) {
  // Positive running reward and no stopping reward: never stop early.
  PartiallyObservableModel m = quality_model(1.0);
  m.stopping_reward = {0.0, 0.0};
  const SolveResult r = value_iteration(m, Utility::linear(), 3);
  EXPECT_EQ(extract_stopping_time(r.policy, {0, 1, 0, 1}), 3);
  EXPECT_THROW(extract_stopping_time(r.policy, {0, 1}), InvalidArgument);
  EXPECT_THROW(extract_stopping_time(r.policy, {1}), InvalidArgument);
}

TEST(CheckIntegrability, Arithmetic) {
  PartiallyObservableModel m = quality_model();
  m.running_reward = {2.0, -1.0};
  m.stopping_reward = {3.0, -4.0};
  EXPECT_EQ(check_integrability(m, 5), 13.0);
  m.running_reward = {-0.5, 0.0};
  m.stopping_reward = {1.0, 0.25};
  EXPECT_LE(check_integrability(m, 10), 1.0);
  m.running_reward = {0.0, 0.0};
  m.stopping_reward = {0.0, 0.0};
  EXPECT_EQ(check_integrability(m, 7), 0.0);
}

TEST(HorizonLimit, ConvergesWithStrictlyNegativeCost) {
  const PartiallyObservableModel m = quality_model(-0.3);
  const HorizonLimit lim = horizon_limit(m, Utility::linear(), 1e-12, 40);
  EXPECT_TRUE(lim.converged);
  EXPECT_LT(lim.last_increment, 1e-12);
  EXPECT_NEAR(lim.value, value_iteration(m, Utility::linear(), lim.horizon + 3).report.value, 1e-12);
}

TEST(ValueEvaluator, AgreesWithTree) {
  const PartiallyObservableModel m = quality_model();
  const Utility u = Utility::power(0.5, 1.0);
  const SolveResult r = value_iteration(m, u, 3);
  ValueEvaluator ev(m, u);
  for (const PolicyNode& node : r.policy.nodes) {
    EXPECT_NEAR(ev.value(3 - node.stage, node.state), node.value, 1e-14);
  }
  EXPECT_GT(ev.memo_size(), 0u);
}

}  // namespace
}  // namespace stopwise

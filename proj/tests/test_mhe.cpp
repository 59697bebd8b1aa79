#include <cmath>

#include <gtest/gtest.h>

#include "mhe/examples.hpp"
#include "mhe/mhe.hpp"

using namespace mhe;

TEST(Lambda, Example1Choice) {
  // mpmath: alpha = ln(0.99/8) / (3 ln(7/16)), lambda = (7/16)^(1-alpha)
  const LambdaChoice lc = compute_lambda(2.0, 7.0 / 16.0, 3, 0.99);
  EXPECT_NEAR(lc.alpha, 0.84252491246763405315, 1e-13);
  EXPECT_NEAR(lc.lambda, 0.87793626361698755017, 1e-13);
  EXPECT_THROW(compute_lambda(2.0, 7.0 / 16.0, 2), ContractViolation);
}

TEST(Lambda, AlphaClippedIntoUnitInterval) {
  const LambdaChoice lc = compute_lambda(0.1, 0.5, 1, 0.99);
  EXPECT_GT(lc.alpha, 0.0);
  EXPECT_LT(lc.alpha, 1.0);
  EXPECT_LT(lc.lambda, 1.0);
}

TEST(BoundMonitor, Theorem3FormulaByHand) {
  Trajectory tr;
  tr.states = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0.5, 0), Eigen::Vector2d(0.2, 0)};
  tr.process_noise = {Eigen::Vector2d(0.1, 0), Eigen::Vector2d(0, 0.2)};
  tr.measurement_noise = {VectorXd::Constant(1, 0.3), VectorXd::Constant(1, -0.4)};
  tr.outputs = {VectorXd::Zero(1), VectorXd::Zero(1)};
  const std::vector<VectorXd> est{Eigen::Vector2d(0, 0), Eigen::Vector2d(0.4, 0),
                                  Eigen::Vector2d(0.2, 0.1)};
  const Theorem3Params p{2.0, 3.0, 5.0, 0.5, 0.1};
  const BoundReport r = monitor_bound_theorem3(est, tr, Eigen::Vector2d(0, 0), p);
  ASSERT_EQ(r.rows.size(), 3u);
  // t = 2: 4*2*1*0.25 + 2*3*(0.5*0.09 + 0.16) + 4*5*(0.5*0.01 + 0.04) + 0.01
  EXPECT_NEAR(r.rows[2].bound, 2.0 + 6 * 0.205 + 20 * 0.045 + 0.01, 1e-14);
  EXPECT_NEAR(r.rows[0].bound, 8.0 + 0.01, 1e-14);
  EXPECT_NEAR(r.rows[2].err_sq, 0.01, 1e-15);
  EXPECT_EQ(r.violations(), 0);
}

TEST(BoundMonitor, RecursiveAlphaVanishesBelowWindow) {
  const MaxFormCostSpec spec = example2_maxform_spec(3);
  const BetaSet b{spec.beta_x, spec.beta_w, spec.beta_y, spec.beta_v, 0.0};
  const Theorem1Rho rho = make_rho_recursive(b, 3);
  // below N only 2 beta(2s, t) remains
  EXPECT_NEAR(rho.x(0.1, 1), 2.0 * spec.beta_x(0.2, 1), 1e-15);
  EXPECT_GE(rho.x(0.1, 4), 2.0 * spec.beta_x(0.2, 4));
}

TEST(Estimator, PriorRecursion) {
  Scenario s = scenario_fig1(true, false);
  EstimatorConfig cfg = s.estimator;
  cfg.prior0 = s.xbar0;
  MovingHorizonEstimator est(build_example1(), cfg);
  std::vector<VectorXd> xs;
  const VectorXd y = VectorXd::Constant(1, 1.0), u = VectorXd::Zero(1);
  for (int t = 1; t <= 5; ++t) {
    EXPECT_EQ(est.prior_for(t), t <= 3 ? s.xbar0 : xs[t - 4]) << t;
    xs.push_back(est.step(y, u).estimate);
  }
  EXPECT_EQ(est.time(), 5);
}

TEST(Estimator, StepReportsHonourTheSchedule) {
  Scenario s = scenario_fig1(true, true);
  s.T = 8;
  const ScenarioRun run = run_scenario(s, 4);
  for (const StepLog& st : run.steps) {
    EXPECT_FALSE(st.hit_cap) << st.t;
    EXPECT_LE(st.grad_norm, st.eps_hat) << st.t;
    EXPECT_DOUBLE_EQ(st.eps_hat, epsilon_schedule(0.01, 7.0 / 16, 2.0, 3, st.t));
    EXPECT_TRUE(st.monotone);
    EXPECT_TRUE(st.minimum.holds) << st.t;
  }
  EXPECT_EQ(run.bound.violations(), 0);
}

TEST(Estimator, ShadowExactNeverFewerIterations) {
  Scenario s = scenario_fig1(true, true);
  s.T = 6;
  const ScenarioRun run = run_scenario(s, 1, true);
  for (const StepLog& st : run.steps) EXPECT_LE(st.iterations, st.exact_iterations);
}

TEST(Estimator, RelaxedQuadraticNeedsContractiveWindow) {
  Scenario s = scenario_fig1(true, false);
  auto q = std::get<QuadraticCostSpec>(s.estimator.cost);
  q.horizon = 2;
  s.estimator.cost = q;
  s.estimator.prior0 = s.xbar0;
  EXPECT_THROW(MovingHorizonEstimator(build_example1(), s.estimator), ContractViolation);
}

TEST(Estimator, MaxFormNoiseFreeExample2Converges) {
  Scenario s = scenario_fig2(3, false);
  s.T = 10;
  const ScenarioRun run = run_scenario(s, 0);
  EXPECT_LT(run.bound.rows.back().err_sq, 0.01 * run.bound.rows.front().err_sq);
  for (const StepLog& st : run.steps) EXPECT_TRUE(st.minimum.holds) << st.t;
}

TEST(Estimator, ZeroHorizonScenario) {
  Scenario s = scenario_fig1(true, false);
  s.T = 0;
  const ScenarioRun run = run_scenario(s, 0);
  EXPECT_EQ(run.estimates.size(), 1u);
  EXPECT_TRUE(run.steps.empty());
  EXPECT_EQ(run.bound.rows.size(), 1u);
}

#include <cmath>

#include <gtest/gtest.h>

#include "mhe/examples.hpp"
#include "mhe/kl.hpp"
#include "mhe/model.hpp"

using namespace mhe;

TEST(Box, ClampContainsStack) {
  const Box b = Box::uniform(2, -1.0, 1.0);
  EXPECT_TRUE(b.is_bounded());
  EXPECT_TRUE(b.contains(Eigen::Vector2d(0.5, -1.0)));
  EXPECT_FALSE(b.contains(Eigen::Vector2d(1.5, 0.0)));
  EXPECT_EQ(b.clamp(Eigen::Vector2d(3.0, -4.0)), Eigen::Vector2d(1.0, -1.0));
  VectorXd x = Eigen::Vector2d(3.0, 0.25);
  b.clamp_in_place(x);
  EXPECT_EQ(x, Eigen::Vector2d(1.0, 0.25));
  const Box s = Box::stack({b, Box::unbounded(1)});
  EXPECT_EQ(s.dim(), 3);
  EXPECT_FALSE(s.is_bounded());
}

TEST(Model, Example2ClosedFormSlowDecay) {
  // x2 = 0 and w = 0 keep x2 at 0, so x1_t = xi / sqrt(1 + t xi^2).
  const SystemModel m = build_example2();
  NoiseSequences noise;
  for (int t = 0; t < 4; ++t) {
    noise.process.push_back(VectorXd::Zero(1));
    noise.measurement.push_back(VectorXd::Zero(1));
  }
  const Trajectory tr = simulate(m, Eigen::Vector2d(1.0, 0.0), {}, noise, 4);
  ASSERT_EQ(tr.states.size(), 5u);
  EXPECT_NEAR(tr.states[4][0], 1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_EQ(tr.states[4][1], 0.0);
  for (int t = 0; t <= 4; ++t) {
    EXPECT_NEAR(tr.states[t][0], 1.0 / std::sqrt(1.0 + t), 1e-15) << t;
  }
  EXPECT_NEAR(tr.outputs[0][0], 1.0, 1e-15);
}

TEST(Model, Example1StepMatchesFormula) {
  const SystemModel m = build_example1();
  const Eigen::Vector3d x(0.5, -0.2, 0.3), w(0.1, -0.1, 0.05);
  const VectorXd u = VectorXd::Constant(1, 0.4);
  const VectorXd y = step(m, x, u, w);
  EXPECT_NEAR(y[0], 0.5 / 4 + std::log(1.2) / 4 + 0.1, 1e-15);
  EXPECT_NEAR(y[1], std::atan(0.5 + 0.09) - 0.1, 1e-15);
  EXPECT_NEAR(y[2], std::sin(0.1) / 4 + 0.4 + 0.05, 1e-15);
}

TEST(Model, DimensionMismatchIsRejected) {
  const SystemModel m = build_example1();
  EXPECT_THROW(step(m, Eigen::Vector2d(0, 0), VectorXd::Zero(1), VectorXd::Zero(3)),
               ContractViolation);
}

TEST(Model, RegistryLookup) {
  EXPECT_EQ(model_by_name("example2").n(), 2);
  try {
    model_by_name("nope");
    FAIL();
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("example1"), std::string::npos);
    EXPECT_NE(msg.find("example2"), std::string::npos);
  }
}

TEST(GeneralizedGradient, SmoothPointIsPlainGradient) {
  const auto fn = [](const Vec<Dual>& z) { return z[0] * z[0] + 3.0 * z[1]; };
  const Gradient g = generalized_gradient(fn, Eigen::Vector2d(2.0, 1.0));
  EXPECT_FALSE(g.kink);
  EXPECT_DOUBLE_EQ(g.value[0], 4.0);
  EXPECT_DOUBLE_EQ(g.value[1], 3.0);
}

TEST(GeneralizedGradient, AbsoluteValueAtMinimumHasZeroSubgradient) {
  // |z| + z/2: subdifferential at 0 is [-1/2, 3/2], least-norm element 0.
  const auto fn = [](const Vec<Dual>& z) { return abs(z[0]) + 0.5 * z[0]; };
  const Gradient g = generalized_gradient(fn, VectorXd::Zero(1));
  EXPECT_TRUE(g.kink);
  EXPECT_NEAR(g.value[0], 0.0, 1e-15);
}

TEST(GeneralizedGradient, KinkAwayFromMinimumKeepsDescent) {
  // 2z + |z|: subdifferential at 0 is [1, 3], least-norm element 1.
  const auto fn = [](const Vec<Dual>& z) { return 2.0 * z[0] + abs(z[0]); };
  const Gradient g = generalized_gradient(fn, VectorXd::Zero(1));
  EXPECT_TRUE(g.kink);
  EXPECT_NEAR(g.value[0], 1.0, 1e-15);
}

TEST(GeneralizedGradient, TwoKinksCoupled) {
  // |z0| + |z1| + z0 - 0.5 z1 at the origin: subgradient box [0,2] x [-1.5,0.5].
  const auto fn = [](const Vec<Dual>& z) {
    return abs(z[0]) + abs(z[1]) + z[0] - 0.5 * z[1];
  };
  const Gradient g = generalized_gradient(fn, VectorXd::Zero(2));
  EXPECT_NEAR(g.value[0], 0.0, 1e-15);
  EXPECT_NEAR(g.value[1], 0.0, 1e-15);
}

TEST(KL, PowerFamily) {
  const KLFunction b = KLFunction::power(2.0, 1.5, 0.5);
  EXPECT_DOUBLE_EQ(b(4.0, 0), 16.0);
  EXPECT_DOUBLE_EQ(b(4.0, 2), 4.0);
  EXPECT_EQ(b(0.0, 3), 0.0);
  EXPECT_NEAR(b.log_value(4.0, 2), std::log(4.0), 1e-15);
}

TEST(KL, LogSupplyInvertsLogQuadratic) {
  // a1^{-1}(kappa s^q eta^k) with a1(s) = ln(c1 s^2 + 1)
  const KLFunction b = KLFunction::log_supply(3.0, 1.0, 0.9, 2.0);
  const double r = 3.0 * 0.7 * std::pow(0.9, 2);
  EXPECT_NEAR(b(0.7, 2), std::sqrt(std::expm1(r) / 2.0), 1e-14);
  // huge arguments stay finite in the log domain
  EXPECT_NEAR(b.log_value(1000.0, 0), 0.5 * (3000.0 - std::log(2.0)), 1e-9);
}

TEST(KL, LogStateIsPowerOfLinearArgument) {
  // a1^{-1}(eta^k ln(c1 s^2 + 1)) at k = 0 is the identity
  const KLFunction b = KLFunction::log_state(1.0, 0.8, 6.0);
  EXPECT_NEAR(b(0.37, 0), 0.37, 1e-14);
  EXPECT_LT(b(0.37, 5), 0.37);
}

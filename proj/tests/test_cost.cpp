#include <cmath>

#include <gtest/gtest.h>

#include "mhe/cost.hpp"
#include "mhe/examples.hpp"
#include "mhe/random.hpp"

using namespace mhe;

namespace {

WindowData oracle_window() {
  WindowData w;
  w.length = 3;
  w.time = 3;
  w.prior = Eigen::Vector3d(0.3, -0.7, 1.1);
  for (double y : {1.25, -0.4, 2.0}) w.outputs.push_back(VectorXd::Constant(1, y));
  for (double u : {0.1, -0.2, 0.05}) w.inputs.push_back(VectorXd::Constant(1, u));
  return w;
}

DecisionVector oracle_point(bool with_v) {
  DecisionVector z;
  z.anchor = Eigen::Vector3d(0.5, 0.2, -0.3);
  z.w = {Eigen::Vector3d(0.1, -0.05, 0.2), Eigen::Vector3d(0.0, 0.3, -0.1),
         Eigen::Vector3d(-0.2, 0.1, 0.05)};
  if (with_v) {
    for (double v : {0.1, -0.2, 0.3}) z.v.push_back(VectorXd::Constant(1, v));
  }
  return z;
}

}  // namespace

TEST(Layout, FlattenRoundTrip) {
  const SystemModel m = build_example1();
  const DecisionLayout lay = DecisionLayout::for_model(m, 3, true);
  EXPECT_EQ(lay.size(), 3 + 9 + 3);
  const DecisionVector z = oracle_point(true);
  const VectorXd flat = z.flatten();
  const DecisionVector back = DecisionVector::unflatten(lay, flat);
  EXPECT_EQ(back.flatten(), flat);
  const DecisionVector warm = DecisionVector::warm_start(lay, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(warm.flatten().head(3), Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(warm.flatten().tail(12).norm(), 0.0);
}

TEST(QuadraticCost, MatchesHighPrecisionOracle) {
  const SystemModel m = build_example1();
  // mpmath at 30 digits on the same window and point
  const double oracle = 90.3905580502700588128;
  const double J = eval_quadratic(m, example1_quadratic_spec(3), oracle_window(),
                                  oracle_point(false).flatten());
  EXPECT_NEAR(J, oracle, 1e-12 * oracle);
}

TEST(QuadraticCost, ShortWindowUsesMEqualsT) {
  const SystemModel m = build_example1();
  WindowData w = oracle_window();
  w.length = 1;
  w.time = 1;
  w.outputs.resize(1);
  w.inputs.resize(1);
  DecisionVector z = oracle_point(false);
  z.w.resize(1);
  // mu |dx|^2 eta + nu (y0 - h(x))^2 + omega |w0|^2
  const double eta = 7.0 / 16.0;
  const double dx2 = 0.04 + 0.81 + 1.96;
  const double r = 1.25 - (0.5 + 0.09);
  const double expect = 2.0 * dx2 * eta + 70.0 / 3.0 * r * r + 2357.0 / 48.0 * 0.0525;
  EXPECT_NEAR(eval_quadratic(m, example1_quadratic_spec(3), w, z.flatten()), expect,
              1e-12);
}

TEST(MaxFormCost, TermsMatchOracle) {
  const SystemModel m = build_example1();
  const std::vector<double> oracle{
      2.0429133297932330541, 2.2977528084522059833, 2.7495984555324922328,
      0.98199944840446151173, 3.7405436325040597856, 3.1634903453581297599,
      2.3166067138525405445, 3.1968734726291561507, 10.36593835067455289,
      4.0987803063838393533};
  const MaxFormCostSpec spec = example1_maxform_spec(3);
  const VectorXd z = oracle_point(true).flatten();
  const std::vector<double> terms = maxform_terms(m, spec, oracle_window(), z);
  ASSERT_EQ(terms.size(), oracle.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    EXPECT_NEAR(terms[i], oracle[i], 1e-12 * oracle[i]) << i;
  }
  EXPECT_NEAR(eval_maxform(m, spec, oracle_window(), z), 10.36593835067455289, 1e-11);
}

TEST(MaxFormCost, SmoothingBracketsTheMax) {
  const SystemModel m = build_example1();
  const MaxFormCostSpec spec = example1_maxform_spec(3);
  const VectorXd z = oracle_point(true).flatten();
  const double J = eval_maxform(m, spec, oracle_window(), z);
  for (double tau : {1e-1, 1e-2, 1e-3}) {
    const double s = smoothed_maxform(m, spec, oracle_window(), z, tau);
    EXPECT_GE(s, J);
    EXPECT_LE(s, J + tau * std::log(10.0) + 1e-12);
    const double ls = smoothed_log_maxform(m, spec, oracle_window(), z, tau);
    EXPECT_GE(ls, std::log(J) - 1e-12);
    EXPECT_LE(ls, std::log(J) + tau * std::log(10.0) + 1e-12);
  }
}

TEST(Gradient, QuadraticAgreesWithCentralDifferences) {
  const SystemModel m = build_example1();
  const QuadraticCostSpec spec = example1_quadratic_spec(3);
  const CounterRng rng(11, 0x4644);
  const DecisionLayout lay = DecisionLayout::for_model(m, 3, false);
  for (int k = 0; k < 20; ++k) {
    VectorXd z(lay.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.uniform(k * 64 + i, -2.0, 2.0);
    const auto J = [&](const VectorXd& p) { return eval_quadratic(m, spec, oracle_window(), p); };
    const VectorXd g = grad_quadratic(m, spec, oracle_window(), z).value;
    VectorXd fd(z.size());
    const double h = 1e-6;
    for (int i = 0; i < z.size(); ++i) {
      VectorXd a = z, b = z;
      a[i] += h;
      b[i] -= h;
      fd[i] = (J(a) - J(b)) / (2 * h);
    }
    EXPECT_LE((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6) << k;
  }
}

TEST(Gradient, SmoothedLogMaxFormAgreesWithCentralDifferences) {
  const SystemModel m = build_example2();
  const MaxFormCostSpec spec = example2_maxform_spec(3);
  WindowData w;
  w.length = 3;
  w.time = 5;
  w.prior = Eigen::Vector2d(0.2, -0.1);
  for (double y : {0.4, 0.3, 0.35}) w.outputs.push_back(VectorXd::Constant(1, y));
  for (int j = 0; j < 3; ++j) w.inputs.push_back(VectorXd::Zero(0));
  VectorXd z(8);
  z << 0.3, 0.05, 0.004, -0.003, 0.002, 0.1, -0.05, 0.2;
  const double tau = 0.1;
  const auto J = [&](const VectorXd& p) { return smoothed_log_maxform(m, spec, w, p, tau); };
  const VectorXd g = grad_smoothed_log_maxform(m, spec, w, z, tau).value;
  for (int i = 0; i < z.size(); ++i) {
    VectorXd a = z, b = z;
    const double h = 1e-7;
    a[i] += h;
    b[i] -= h;
    const double fd = (J(a) - J(b)) / (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << i;
  }
}

TEST(Rollout, ReproducesSimulation) {
  const SystemModel m = build_example1();
  const WindowData w = oracle_window();
  const DecisionVector z = oracle_point(false);
  const auto xs = rollout(m, w, z);
  ASSERT_EQ(xs.size(), 4u);
  VectorXd x = z.anchor;
  for (int j = 0; j < 3; ++j) x = step(m, x, w.inputs[j], z.w[j]);
  EXPECT_EQ(xs.back(), x);
}

#include <cmath>

#include <gtest/gtest.h>

#include "mhe/certify.hpp"
#include "mhe/examples.hpp"

using namespace mhe;

TEST(Comparison, PowerAndLogQuadraticInverses) {
  const auto p = ComparisonFunction::power(3.0, 2.0);
  EXPECT_DOUBLE_EQ(p(2.0), 12.0);
  EXPECT_NEAR(p.inverse(12.0), 2.0, 1e-15);
  const auto l = ComparisonFunction::log_quadratic(1.0, 6.3899);
  EXPECT_NEAR(l.inverse(l(0.7)), 0.7, 1e-14);
}

TEST(Synthesis, RationalTheorem3Weights) {
  const auto p = select_parameters_theorem3(Rational(1), Rational(140, 3),
                                            Rational(146, 3), Rational(7, 16));
  EXPECT_EQ(p.mu, Rational(2));
  EXPECT_EQ(p.nu, Rational(70, 3));
  EXPECT_EQ(p.omega, Rational(2357, 48));
  EXPECT_EQ(p.n_min, 3);
}

TEST(Synthesis, DoubleTheorem3AndTheorem2) {
  const auto p3 = select_parameters_theorem3(example1_certificate());
  EXPECT_DOUBLE_EQ(p3.mu, 2.0);
  EXPECT_DOUBLE_EQ(p3.nu, 70.0 / 3.0);
  EXPECT_DOUBLE_EQ(p3.omega, 2357.0 / 48.0);
  EXPECT_EQ(p3.n_min, 3);
  const auto p2 = select_parameters_theorem2(example1_certificate());
  EXPECT_DOUBLE_EQ(p2.mu, 1.0);
  EXPECT_DOUBLE_EQ(p2.omega, 146.0 / 3.0);
  EXPECT_EQ(p2.n_min, 2);  // 4 (7/16)^2 < 1
}

TEST(Synthesis, ConditionChecker) {
  const auto cert = example1_certificate();
  EXPECT_EQ(check_theorem3_conditions(cert, 2, 70.0 / 3, 2357.0 / 48, 7.0 / 16, 3), "");
  EXPECT_NE(check_theorem3_conditions(cert, 2, 70.0 / 3, 2357.0 / 48, 7.0 / 16, 2), "");
  EXPECT_NE(check_theorem3_conditions(cert, 1.5, 70.0 / 3, 2357.0 / 48, 7.0 / 16, 3), "");
}

TEST(Betas, Example1Coefficients) {
  const BetaSet b = derive_betas(example1_lyapunov_spec(), false);
  EXPECT_NEAR(b.beta_x.kappa(), 1.0, 1e-12);
  EXPECT_NEAR(b.beta_y.kappa(), 6.8313005106397322555, 1e-12);  // sqrt(140/3)
  EXPECT_NEAR(b.beta_w.kappa(), 6.9761498454854499109, 1e-12);  // sqrt(146/3)
  EXPECT_NEAR(b.beta_x.eta_b(), 0.84779124789065851738, 1e-12);  // sqrt(23/32)
  EXPECT_EQ(b.beta_x.q(), 1.0);
  EXPECT_EQ(min_window_theorem1(b.beta_x.eta_b()), 5);
}

TEST(Betas, Theorem1WindowConditions) {
  const BetaSet b = derive_betas(example1_lyapunov_spec(), false);
  const auto at = [&](int N) {
    return check_theorem1_conditions(b, theorem1_alpha_candidates(b, N), N);
  };
  EXPECT_TRUE(at(5).pass());
  EXPECT_TRUE(at(6).pass());
  const Theorem1Check four = at(4);
  EXPECT_FALSE(four.pass());
  ASSERT_TRUE(four.witness.has_value());
  EXPECT_GT(four.witness->lhs, four.witness->rhs);
}

TEST(Betas, NonContractiveSpecIsRejected) {
  LyapunovSpec s = example1_lyapunov_spec();
  // alpha3 = 4 alpha2 gives rate 1 - 2 < 0
  s.alpha3 = ComparisonFunction::power(4.0 * s.alpha2.a(), s.alpha2.shape());
  EXPECT_THROW(derive_betas(s, false), ContractViolation);
}

TEST(Dissipation, Example1HoldsAndMutationFails) {
  const SystemModel m = build_example1();
  const auto ok = check_dissipation(m, example1_lyapunov_spec(),
                                    example1_dissipation_domains(), 20000, 3);
  EXPECT_TRUE(ok.passes());
  EXPECT_LT(ok.max_residual, 0.0);
  const auto bad = check_dissipation(m, example1_lyapunov_spec(1.0 / 16.0),
                                     example1_dissipation_domains(), 20000, 3);
  EXPECT_FALSE(bad.passes());
  EXPECT_GE(bad.worst_index, 0);
}

TEST(Dissipation, SerialEqualsParallel) {
  const SystemModel m = build_example1();
  const auto a = check_dissipation(m, example1_lyapunov_spec(), example1_dissipation_domains(),
                                   5000, 9, Execution::kSerial);
  const auto b = check_dissipation(m, example1_lyapunov_spec(), example1_dissipation_domains(),
                                   5000, 9, Execution::kParallel);
  EXPECT_EQ(a.max_residual, b.max_residual);
  EXPECT_EQ(a.worst_index, b.worst_index);
}

TEST(Certificate, Example2SampledSupIsNonVacuousAndBelowReported) {
  const SystemModel m = build_example2();
  const auto sup = sampled_certificate_sup(m, example2_constants(),
                                           example2_certificate_domains(), 20000, 1);
  EXPECT_GE(sup.value, 0.5);
  EXPECT_LE(sup.value, kExample2C0 + 0.05);
}

TEST(Certificate, RatioExcludesSmallSeparation) {
  const SystemModel m = build_example2();
  CertificatePoint p{Eigen::Vector2d(0.1, 0.1), Eigen::Vector2d(0.1, 0.1 + 1e-8),
                     VectorXd::Zero(1), VectorXd::Zero(1), VectorXd::Zero(1), VectorXd::Zero(1)};
  EXPECT_EQ(certificate_ratio(m, example2_constants(), p, 1e-6),
            -std::numeric_limits<double>::infinity());
}

TEST(Certificate, MakeCertificateAcceptsOnlyContractions) {
  EXPECT_TRUE(make_certificate(example2_constants(), kExample2C0).accepted);
  EXPECT_FALSE(make_certificate(example2_constants(), 1.2).accepted);
  EXPECT_DOUBLE_EQ(make_certificate(example2_constants(), kExample2C0).sigma_rate(),
                   0.5 * (kExample2C0 + 1.0));
}

TEST(Certificate, ExtendedBetasForExample2) {
  const auto spec = example2_maxform_spec(3);
  EXPECT_EQ(spec.beta_x.family(), KLFunction::Family::kLogState);
  EXPECT_EQ(spec.beta_y.family(), KLFunction::Family::kLogSupply);
  EXPECT_NEAR(spec.beta_x.eta_b(), 0.5 * (kExample2C0 + 1.0), 1e-15);
}

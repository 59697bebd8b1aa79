#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "mhe/kl.hpp"
#include "mhe/model.hpp"
#include "mhe/parallel.hpp"

namespace mhe {

/// Class-K comparison function from the two families the case studies need:
///   power          a * s^q
///   log_quadratic  a * ln(c s^2 + 1)
class ComparisonFunction {
 public:
  enum class Family { kPower, kLogQuadratic };

  ComparisonFunction() = default;
  static ComparisonFunction power(double a, double q);
  static ComparisonFunction log_quadratic(double a, double c);

  Family family() const { return family_; }
  double a() const { return a_; }
  /// Exponent q (power) or curvature c (log_quadratic).
  double shape() const { return shape_; }

  double operator()(double s) const;
  double inverse(double r) const;

 private:
  ComparisonFunction(Family f, double a, double shape);
  Family family_ = Family::kPower;
  double a_ = 1.0;
  double shape_ = 1.0;
};

/// Incremental Lyapunov function data: sandwich bounds alpha1 <= V <= alpha2,
/// decrease alpha3 and supply rates. `sigma_v` present selects the extended
/// dissipation inequality with a measurement-noise supply.
struct LyapunovSpec {
  std::function<double(const VectorXd&, const VectorXd&)> V;
  ComparisonFunction alpha1;
  ComparisonFunction alpha2;
  ComparisonFunction alpha3;
  ComparisonFunction sigma_w;
  ComparisonFunction sigma_y;
  std::optional<ComparisonFunction> sigma_v;

  bool extended() const { return sigma_v.has_value(); }
};

struct DissipationDomains {
  Box state;
  Box process_noise;
  Box input;
  Box measurement_noise;  // used by the extended inequality only
};

struct DissipationResult {
  static constexpr double kPassTolerance = 1e-9;

  double max_residual = 0.0;
  std::int64_t samples = 0;
  std::int64_t worst_index = -1;
  VectorXd x, z, wx, wz, u, vx, vz;  // witness of the largest residual

  bool passes() const { return max_residual <= kPassTolerance; }
};

/// Largest sampled residual
///   V(f(x,u,wx), f(z,u,wz)) - V(x,z) + alpha3(|x-z|) - sigma_w(|wx-wz|)
///     - sigma_y(|h(x,vx) - h(z,vz)|) [- sigma_v(|vx-vz|)]
/// over uniform samples of the domains. vx = vz = 0 unless extended.
DissipationResult check_dissipation(const SystemModel& model,
                                    const LyapunovSpec& spec,
                                    const DissipationDomains& domains,
                                    std::int64_t samples, std::uint64_t seed,
                                    Execution exec = Execution::kParallel);

struct BetaSet {
  KLFunction beta_x;
  KLFunction beta_w;
  KLFunction beta_y;
  std::optional<KLFunction> beta_v;
  double sigma_rate = 0.0;  // sigma(s) = sigma_rate * s
};

/// Closed-form KL bounds from the Lyapunov data. Fails with
/// ContractViolation when sigma(s) = s - alpha3(alpha2^{-1}(s))/2 is not a
/// contraction or the compositions leave the supported families.
BetaSet derive_betas(const LyapunovSpec& spec, bool extended);

/// Smallest N >= 1 with factor * eta^N < 1.
int min_window_theorem1(double eta_kl, double factor = 2.0);

struct CostParameters {
  double mu = 0.0;
  double nu = 0.0;
  double omega = 0.0;
  int n_min = 0;  // smallest N with 4 mu eta^N < 1
};

/// Exponential detectability constants (c_x, c_v, c_w, eta).
struct ExponentialCertificate {
  double c_x = 0.0;
  double c_v = 0.0;
  double c_w = 0.0;
  double eta = 0.0;

  void validate() const;
};

/// Tight weights for relaxed (inexact) optimisation:
/// mu = c_x + 1, nu = c_v / 2, omega = c_w + eta.
CostParameters select_parameters_theorem3(const ExponentialCertificate& cert);
/// Tight weights for exact optimisation: mu = c_x, nu = c_v / 2, omega = c_w.
CostParameters select_parameters_theorem2(const ExponentialCertificate& cert);

using Rational = boost::multiprecision::cpp_rational;

struct RationalCostParameters {
  Rational mu, nu, omega;
  int n_min = 0;
};

/// Same synthesis in exact rational arithmetic.
RationalCostParameters select_parameters_theorem3(const Rational& c_x,
                                                  const Rational& c_v,
                                                  const Rational& c_w,
                                                  const Rational& eta);

/// Checks mu >= c_x + 1, nu >= c_v/2, omega >= c_w + eta and 4 mu eta^N < 1.
/// Returns an empty string when all hold, else the first failed condition.
std::string check_theorem3_conditions(const ExponentialCertificate& cert,
                                      double mu, double nu, double omega,
                                      double eta, int horizon);

struct Theorem1Alphas {
  KLFunction alpha_x;
  KLFunction alpha_w;
  KLFunction alpha_v;
  double c = 0.5;       // alpha_l(s,k) = 8 kappa_l s (eta^c)^k
  bool c_valid = false;  // 2 (eta^{1-c})^N < 1
};

/// alpha candidates 8 kappa_l s (eta^c)^k for scaled-linear betas, with c
/// chosen so that 2 (eta^{1-c})^N = theta. Falls back to c = 0.5 (flagged
/// invalid) when 2 eta^N >= 1.
Theorem1Alphas theorem1_alpha_candidates(const BetaSet& betas, int horizon,
                                         double theta = 0.99);

struct Theorem1Violation {
  int inequality = 0;  // 1..6 for the x (a,b), w (a,b), v (a,b) conditions
  double s = 0.0;
  int k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct Theorem1Check {
  bool grid_pass = false;
  bool closed_form_pass = false;
  std::optional<Theorem1Violation> witness;
  long evaluations = 0;

  bool pass() const { return grid_pass && closed_form_pass; }
};

/// Verifies
///   beta_x(4 beta_l(2s,k), N) <= alpha_l(s,k+N)
///   beta_x(2 alpha_l(s,k), N) <= alpha_l(s,k+N)        for l = x, w, v
/// on s in {0} U logspace(1e-6, 1e6), k in 0..200, plus the scaled-linear
/// closed form. `betas.beta_v` defaults to beta_y when absent.
Theorem1Check check_theorem1_conditions(const BetaSet& betas,
                                        const Theorem1Alphas& alphas,
                                        int horizon);

// --- certificate program for the non-exponential case ---------------------

struct CertificateConstants {
  double c1 = 1.0;
  double c_w = 1.0;
  double c_y = 1.0;
  double c_v = 1.0;
};

struct CertificateDomains {
  Box state;
  Box process_noise;
  Box measurement_noise;
  double min_separation = 1e-6;  // |x - z| excluded below this radius
};

/// A point of the certificate program: (x, z, wx, wz, vx, vz) stacked.
struct CertificatePoint {
  VectorXd x, z, wx, wz, vx, vz;
};

/// F = [V(f(x,wx), f(z,wz)) - c_w|wx-wz| - c_y|h(x,vx)-h(z,vz)| - c_v|vx-vz|]
///     / V(x,z),  V(x,z) = ln(c1 |x-z|^2 + 1).
/// Returns -infinity inside the excluded radius.
double certificate_ratio(const SystemModel& model,
                         const CertificateConstants& c,
                         const CertificatePoint& p, double min_separation);

struct SupEstimate {
  double value = 0.0;
  std::int64_t samples = 0;
  CertificatePoint argmax;
};

/// Sampled sup of F over uniform points of the domains.
SupEstimate sampled_certificate_sup(const SystemModel& model,
                                    const CertificateConstants& c,
                                    const CertificateDomains& domains,
                                    std::int64_t samples, std::uint64_t seed,
                                    Execution exec = Execution::kParallel);

struct CertificateSearchOptions {
  int presamples = 2000;      // uniform points ranked to seed the inner search
  int starts = 12;            // pattern-search starts per inner maximisation
  int pattern_iters = 300;
  int outer_sweeps = 6;
  CertificateConstants initial{1.0, 1.0, 1.0, 1.0};
  Box constant_box = Box(Eigen::Vector4d(0.1, 0.0, 0.0, 0.0),
                         Eigen::Vector4d(10.0, 5.0, 5.0, 5.0));
  std::uint64_t seed = 0;
  Execution execution = Execution::kParallel;
};

/// Derivative-free multi-start pattern search for sup F at fixed constants.
SupEstimate inner_certificate_sup(const SystemModel& model,
                                  const CertificateConstants& c,
                                  const CertificateDomains& domains,
                                  const CertificateSearchOptions& opts);

/// i-UIOSS certificate with V = ln(c1 |x-z|^2 + 1). Obtained by
/// falsification-tested search, not a proof of the supremum.
struct Certificate {
  CertificateConstants constants;
  double c0 = 0.0;  // inner supremum estimate
  bool accepted = false;
  CertificatePoint witness;
  int outer_evaluations = 0;

  /// sigma(s) = (c0 + 1) s / 2.
  double sigma_rate() const { return 0.5 * (c0 + 1.0); }
  /// V, alpha1 = alpha2 = ln(c1 s^2 + 1), alpha3 = (1 - c0) ln(c1 s^2 + 1),
  /// linear supplies.
  LyapunovSpec lyapunov_spec() const;
};

/// Builds the certificate from given constants and a known c0.
Certificate make_certificate(const CertificateConstants& c, double c0);

/// Outer coordinate descent over the constants minimising the inner sup;
/// accepted when the inner sup lies in (0, 1).
Certificate certificate_search(const SystemModel& model,
                               const CertificateDomains& domains,
                               const CertificateSearchOptions& opts);

}  // namespace mhe

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhe/certify.hpp"
#include "mhe/mhe.hpp"
#include "mhe/model.hpp"

namespace mhe {

// --- models ---------------------------------------------------------------

/// Third-order system with a known input:
///   f = (x1/4 + ln(|x2|+1)/4 + w1, atan(x1 + x3^2) + w2, sin(x2 + x3)/4 + u + w3)
///   h = x1 + x3^2 + v
/// Unconstrained.
SystemModel build_example1();

/// Second-order system with slow (non-exponential) decay:
///   f = (x1/sqrt(x1^2+1) + 0.1 x2^2, 0.5 sin(x2) + w)
///   h = x1 + x2^2 + atan(x1 + x2) v
/// X = [-2,2]^2, W = [-0.01,0.01], V = [-0.5,0.5].
SystemModel build_example2();

std::vector<std::string> model_names();
/// Registry lookup; unknown names raise ContractViolation listing the registry.
SystemModel model_by_name(const std::string& name);

// --- exogenous signals ----------------------------------------------------

struct NoiseLaw {
  enum class Kind { kZero, kGaussian, kUniform };
  Kind kind = Kind::kZero;
  double sigma = 0.0;
  double a = 0.0;
  double b = 0.0;

  static NoiseLaw zero() { return {}; }
  static NoiseLaw gaussian(double sigma);
  static NoiseLaw uniform(double a, double b);

  void validate() const;
  bool operator==(const NoiseLaw&) const = default;
};

enum class NoiseChannel : std::uint64_t { kProcess = 1, kMeasurement = 2 };

/// T vectors of dimension `dim`; a pure function of (law, seed, channel, run).
std::vector<VectorXd> noise_gen(const NoiseLaw& law, std::uint64_t seed,
                                NoiseChannel channel, std::uint64_t run, int T,
                                int dim);

struct InputLaw {
  enum class Kind { kZero, kSine };
  Kind kind = Kind::kZero;
  double amplitude = 1.0;
  double frequency = 0.0;  // u_t = amplitude * sin(frequency * t)

  static InputLaw zero() { return {}; }
  static InputLaw sine(double amplitude, double frequency);

  VectorXd at(long t, int p) const;
  bool operator==(const InputLaw&) const = default;
};

// --- case-study data ------------------------------------------------------

/// V = |x-z|^2, alpha1 = alpha2 = s^2, alpha3 = (1 - contraction) s^2,
/// sigma_w = 3 s^2, sigma_y = 2 s^2. The nominal contraction is 7/16.
LyapunovSpec example1_lyapunov_spec(double contraction = 7.0 / 16.0);
/// States [-5,5]^3, noises [-1,1]^3, input [-1,1].
DissipationDomains example1_dissipation_domains();
/// (c_x, c_v, c_w, eta) = (1, 140/3, 146/3, 7/16).
ExponentialCertificate example1_certificate();
/// (mu, nu, omega, eta, N) = (2, 70/3, 2357/48, 7/16, N).
QuadraticCostSpec example1_quadratic_spec(int horizon = 3);
/// Max-form weights from the Example-1 beta construction; beta_v = beta_y.
MaxFormCostSpec example1_maxform_spec(int horizon = 5);

/// (c1, c_w, c_y, c_v) = (6.3899, 5.0010, 0.1822, 4.9997) and c0 = 0.8751.
CertificateConstants example2_constants();
inline constexpr double kExample2C0 = 0.8751;
CertificateDomains example2_certificate_domains();
/// Max-form weights from the extended construction with the constants above.
MaxFormCostSpec example2_maxform_spec(int horizon);

// --- scenarios ------------------------------------------------------------

struct Scenario {
  std::string name;
  std::string model;
  VectorXd x0;
  VectorXd xbar0;
  InputLaw input;
  NoiseLaw noise_w;
  NoiseLaw noise_v;
  int T = 60;
  EstimatorConfig estimator;
  std::uint64_t seed = 0;

  /// Checks the model exists, dimensions agree and noise laws respect
  /// bounded noise boxes.
  void validate() const;
};

Scenario scenario_fig1(bool quadratic, bool noisy);
Scenario scenario_fig2(int horizon, bool noisy);

struct StepLog {
  long t = 0;
  int iterations = 0;
  double grad_norm = 0.0;
  double eps_hat = 0.0;
  bool hit_cap = false;
  bool monotone = true;
  long line_search_evals = 0;
  long gradient_evals = 0;
  MinimumCheck minimum;
  // shadow Exact solve of the same window from the same start (-1 if off)
  int exact_iterations = -1;
  long exact_line_search_evals = 0;
};

struct ScenarioRun {
  Trajectory truth;
  std::vector<VectorXd> estimates;  // x_{t|t}, t = 0..T (x_{0|0} = xbar0)
  std::vector<StepLog> steps;       // t = 1..T
  BoundReport bound;
  bool guaranteed_bound = false;  // quadratic cost: bound is a theorem

  long total_iterations() const;
  int minimum_violations() const;
};

/// Simulates the scenario for Monte Carlo run index `run` and runs the
/// estimator with the matching bound monitor. With `shadow_exact` every
/// quadratic window is solved a second time under Exact stopping.
ScenarioRun run_scenario(const Scenario& scenario, std::uint64_t run = 0,
                         bool shadow_exact = false);

}  // namespace mhe

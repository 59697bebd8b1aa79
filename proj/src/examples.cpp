#include "mhe/examples.hpp"

#include <cmath>
#include <limits>
#include <type_traits>

#include "mhe/errors.hpp"
#include "mhe/random.hpp"

namespace mhe {

SystemModel build_example1() {
  auto f = [](const auto& x, const auto& u, const auto& w) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    using std::abs;
    using std::atan;
    using std::log;
    using std::sin;
    SVec<T> out(3);
    out[0] = x[0] / T(4.0) + log(abs(x[1]) + T(1.0)) / T(4.0) + w[0];
    out[1] = atan(x[0] + x[2] * x[2]) + w[1];
    out[2] = sin(x[1] + x[2]) / T(4.0) + u[0] + w[2];
    return out;
  };
  auto h = [](const auto& x, const auto& v) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    SVec<T> out(1);
    out[0] = x[0] + x[2] * x[2] + v[0];
    return out;
  };
  return SystemModel::create(
      "example1", ModelDimensions{3, 1, 1, 3, 1}, f, h,
      {Box::unbounded(3), Box::unbounded(3), Box::unbounded(1), Box::unbounded(1)});
}

SystemModel build_example2() {
  auto f = [](const auto& x, const auto& /*u*/, const auto& w) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    using std::sin;
    using std::sqrt;
    SVec<T> out(2);
    out[0] = x[0] / sqrt(x[0] * x[0] + T(1.0)) + T(0.1) * x[1] * x[1];
    out[1] = T(0.5) * sin(x[1]) + w[0];
    return out;
  };
  auto h = [](const auto& x, const auto& v) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    using std::atan;
    SVec<T> out(1);
    out[0] = x[0] + x[1] * x[1] + atan(x[0] + x[1]) * v[0];
    return out;
  };
  return SystemModel::create(
      "example2", ModelDimensions{2, 1, 0, 1, 1}, f, h,
      {Box::uniform(2, -2.0, 2.0), Box::uniform(1, -0.01, 0.01),
       Box::uniform(1, -0.5, 0.5), Box::unbounded(0)});
}

std::vector<std::string> model_names() { return {"example1", "example2"}; }

SystemModel model_by_name(const std::string& name) {
  if (name == "example1") return build_example1();
  if (name == "example2") return build_example2();
  std::string known;
  for (const std::string& n : model_names()) known += (known.empty() ? "" : ", ") + n;
  throw ContractViolation("unknown model '" + name + "' (registry: " + known + ")");
}

// --- signals --------------------------------------------------------------

NoiseLaw NoiseLaw::gaussian(double sigma) {
  NoiseLaw law;
  law.kind = Kind::kGaussian;
  law.sigma = sigma;
  law.validate();
  return law;
}

NoiseLaw NoiseLaw::uniform(double a, double b) {
  NoiseLaw law;
  law.kind = Kind::kUniform;
  law.a = a;
  law.b = b;
  law.validate();
  return law;
}

void NoiseLaw::validate() const {
  if (kind == Kind::kGaussian) {
    MHE_REQUIRE(sigma >= 0.0 && std::isfinite(sigma),
                "noise law: gaussian sigma must be finite and >= 0");
  }
  if (kind == Kind::kUniform) {
    MHE_REQUIRE(std::isfinite(a) && std::isfinite(b) && a <= b,
                "noise law: uniform bounds must satisfy a <= b");
  }
}

std::vector<VectorXd> noise_gen(const NoiseLaw& law, std::uint64_t seed,
                                NoiseChannel channel, std::uint64_t run, int T,
                                int dim) {
  law.validate();
  MHE_REQUIRE(T >= 0 && dim >= 0, "noise_gen: negative size");
  const CounterRng rng(seed, CounterRng::mix(static_cast<std::uint64_t>(channel)) ^
                                 CounterRng::mix(run + 0x52554EULL));
  std::vector<VectorXd> out(T, VectorXd::Zero(dim));
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < dim; ++c) {
      const std::uint64_t idx = static_cast<std::uint64_t>(t) * dim + c;
      switch (law.kind) {
        case NoiseLaw::Kind::kZero:
          break;
        case NoiseLaw::Kind::kGaussian:
          out[t][c] = law.sigma * rng.normal(idx);
          break;
        case NoiseLaw::Kind::kUniform:
          out[t][c] = rng.uniform(idx, law.a, law.b);
          break;
      }
    }
  }
  return out;
}

InputLaw InputLaw::sine(double amplitude, double frequency) {
  InputLaw law;
  law.kind = Kind::kSine;
  law.amplitude = amplitude;
  law.frequency = frequency;
  return law;
}

VectorXd InputLaw::at(long t, int p) const {
  if (p == 0) return VectorXd(0);
  if (kind == Kind::kZero) return VectorXd::Zero(p);
  return VectorXd::Constant(p, amplitude * std::sin(frequency * static_cast<double>(t)));
}

// --- case-study data ------------------------------------------------------

LyapunovSpec example1_lyapunov_spec(double contraction) {
  MHE_REQUIRE(contraction > 0.0 && contraction < 1.0,
              "example1_lyapunov_spec: contraction must lie in (0,1)");
  LyapunovSpec spec;
  spec.V = [](const VectorXd& x, const VectorXd& z) { return (x - z).squaredNorm(); };
  spec.alpha1 = ComparisonFunction::power(1.0, 2.0);
  spec.alpha2 = ComparisonFunction::power(1.0, 2.0);
  spec.alpha3 = ComparisonFunction::power(1.0 - contraction, 2.0);
  spec.sigma_w = ComparisonFunction::power(3.0, 2.0);
  spec.sigma_y = ComparisonFunction::power(2.0, 2.0);
  return spec;
}

DissipationDomains example1_dissipation_domains() {
  return {Box::uniform(3, -5.0, 5.0), Box::uniform(3, -1.0, 1.0),
          Box::uniform(1, -1.0, 1.0), Box::uniform(1, -1.0, 1.0)};
}

ExponentialCertificate example1_certificate() {
  return {1.0, 140.0 / 3.0, 146.0 / 3.0, 7.0 / 16.0};
}

QuadraticCostSpec example1_quadratic_spec(int horizon) {
  return {2.0, 70.0 / 3.0, 2357.0 / 48.0, 7.0 / 16.0, horizon};
}

MaxFormCostSpec example1_maxform_spec(int horizon) {
  const BetaSet b = derive_betas(example1_lyapunov_spec(), false);
  return {b.beta_x, b.beta_w, b.beta_y, b.beta_y, horizon};
}

CertificateConstants example2_constants() {
  return {6.3899, 5.0010, 0.1822, 4.9997};
}

CertificateDomains example2_certificate_domains() {
  return {Box::uniform(2, -2.0, 2.0), Box::uniform(1, -0.01, 0.01),
          Box::uniform(1, -0.5, 0.5), 1e-6};
}

MaxFormCostSpec example2_maxform_spec(int horizon) {
  const Certificate cert = make_certificate(example2_constants(), kExample2C0);
  const BetaSet b = derive_betas(cert.lyapunov_spec(), true);
  return {b.beta_x, b.beta_w, b.beta_y, *b.beta_v, horizon};
}

// --- scenarios ------------------------------------------------------------

void Scenario::validate() const {
  const SystemModel m = model_by_name(model);
  MHE_REQUIRE(x0.size() == m.n(), "scenario: x0 dimension does not match the model");
  MHE_REQUIRE(xbar0.size() == m.n(),
              "scenario: xbar0 dimension does not match the model");
  MHE_REQUIRE(T >= 0, "scenario: T must be >= 0");
  noise_w.validate();
  noise_v.validate();
  const auto respects = [](const NoiseLaw& law, const Box& box) {
    if (law.kind == NoiseLaw::Kind::kZero) return true;
    for (int i = 0; i < box.dim(); ++i) {
      const bool finite = std::isfinite(box.lower[i]) || std::isfinite(box.upper[i]);
      if (!finite) continue;
      if (law.kind == NoiseLaw::Kind::kGaussian && law.sigma > 0.0) return false;
      if (law.kind == NoiseLaw::Kind::kUniform &&
          (law.a < box.lower[i] || law.b > box.upper[i])) {
        return false;
      }
    }
    return true;
  };
  MHE_REQUIRE(respects(noise_w, m.domains().process_noise),
              "scenario: process-noise law leaves the noise box");
  MHE_REQUIRE(respects(noise_v, m.domains().measurement_noise),
              "scenario: measurement-noise law leaves the noise box");
  MHE_REQUIRE(m.domains().state.contains(x0), "scenario: x0 outside the state box");
  EstimatorConfig cfg = estimator;
  cfg.prior0 = xbar0;
  cfg.validate(m);
}

Scenario scenario_fig1(bool quadratic, bool noisy) {
  Scenario s;
  s.model = "example1";
  s.name = std::string("fig1-") + (quadratic ? "mhe3-quadratic" : "mhe5-maxform") +
           (noisy ? "-noisy" : "-noisefree");
  s.x0 = Eigen::Vector3d(2.0, 2.0, 2.0);
  s.xbar0 = Eigen::Vector3d(-2.0, -2.0, -2.0);
  s.input = InputLaw::sine(1.0, 0.2);
  if (noisy) {
    s.noise_w = NoiseLaw::gaussian(0.1);
    s.noise_v = NoiseLaw::gaussian(0.5);
  }
  s.T = 60;
  s.estimator.stop_mode = StopMode::kRelaxed;
  s.estimator.epsilon = 0.01;
  s.estimator.prior0 = s.xbar0;
  if (quadratic) {
    s.estimator.cost = example1_quadratic_spec(3);
    s.estimator.certificate = example1_certificate();
  } else {
    s.estimator.cost = example1_maxform_spec(5);
  }
  return s;
}

Scenario scenario_fig2(int horizon, bool noisy) {
  Scenario s;
  s.model = "example2";
  s.name = "fig2-mhe" + std::to_string(horizon) + (noisy ? "-noisy" : "-noisefree");
  s.x0 = Eigen::Vector2d(1.0, 1.0);
  s.xbar0 = Eigen::Vector2d(-1.0, -1.0);
  s.input = InputLaw::zero();
  if (noisy) {
    s.noise_w = NoiseLaw::uniform(-0.01, 0.01);
    s.noise_v = NoiseLaw::uniform(-0.5, 0.5);
  }
  s.T = 60;
  s.estimator.cost = example2_maxform_spec(horizon);
  s.estimator.stop_mode = StopMode::kRelaxed;
  s.estimator.epsilon = 0.01;
  s.estimator.prior0 = s.xbar0;
  return s;
}

long ScenarioRun::total_iterations() const {
  long total = 0;
  for (const StepLog& s : steps) total += s.iterations;
  return total;
}

int ScenarioRun::minimum_violations() const {
  int count = 0;
  for (const StepLog& s : steps) count += s.minimum.holds ? 0 : 1;
  return count;
}

namespace {

bool scaled_linear(const MaxFormCostSpec& spec) {
  const double eta = spec.beta_x.eta_b();
  for (const KLFunction* b : {&spec.beta_x, &spec.beta_w, &spec.beta_y, &spec.beta_v}) {
    if (b->family() != KLFunction::Family::kPower || b->q() != 1.0 ||
        b->eta_b() != eta) {
      return false;
    }
  }
  return true;
}

}  // namespace

ScenarioRun run_scenario(const Scenario& scenario, std::uint64_t run,
                         bool shadow_exact) {
  scenario.validate();
  const SystemModel model = model_by_name(scenario.model);
  const int T = scenario.T;

  std::vector<VectorXd> inputs;
  for (int t = 0; t < T; ++t) inputs.push_back(scenario.input.at(t, model.p()));
  NoiseSequences noise;
  noise.process = noise_gen(scenario.noise_w, scenario.seed, NoiseChannel::kProcess,
                            run, T, model.nw());
  noise.measurement = noise_gen(scenario.noise_v, scenario.seed,
                                NoiseChannel::kMeasurement, run, T, model.nv());

  ScenarioRun out;
  out.truth = simulate(model, scenario.x0, inputs, noise, T);

  EstimatorConfig cfg = scenario.estimator;
  cfg.prior0 = scenario.xbar0;
  cfg.seed = CounterRng::mix(scenario.seed ^ CounterRng::mix(run + 0x4D4845ULL));
  MovingHorizonEstimator est(model, cfg);

  out.estimates.push_back(scenario.xbar0);
  for (int t = 1; t <= T; ++t) {
    const StepResult r = est.step(out.truth.outputs[t - 1], inputs[t - 1]);
    StepLog log;
    log.t = r.t;
    log.iterations = r.report.iterations;
    log.grad_norm = r.report.grad_norm;
    log.eps_hat = r.eps_hat;
    log.hit_cap = r.report.hit_cap;
    log.monotone = r.report.monotone();
    log.line_search_evals = r.report.line_search_evals;
    log.gradient_evals = r.report.gradient_evals;
    log.minimum = check_minimum_property(est, r, out.truth);
    if (shadow_exact && cfg.quadratic()) {
      const auto [z, rep] = est.solve_quadratic(r.window, StopRule::exact(cfg.max_iters));
      log.exact_iterations = rep.iterations;
      log.exact_line_search_evals = rep.line_search_evals;
    }
    out.steps.push_back(log);
    out.estimates.push_back(r.estimate);
  }

  if (const auto* q = std::get_if<QuadraticCostSpec>(&cfg.cost)) {
    const LambdaChoice lc = compute_lambda(q->mu, q->eta, q->horizon);
    Theorem3Params p{q->mu, q->nu, q->omega, lc.lambda,
                     cfg.stop_mode == StopMode::kRelaxed ? cfg.epsilon : 0.0};
    out.bound = monitor_bound_theorem3(out.estimates, out.truth, scenario.xbar0, p);
    out.bound.alpha = lc.alpha;
    out.guaranteed_bound = true;
  } else {
    const auto& spec = std::get<MaxFormCostSpec>(cfg.cost);
    BetaSet betas{spec.beta_x, spec.beta_w, spec.beta_y, spec.beta_v, 0.0};
    Theorem1Rho rho;
    if (scaled_linear(spec)) {
      const Theorem1Alphas alphas = theorem1_alpha_candidates(betas, spec.horizon);
      rho = make_rho(betas, alphas);
      out.bound = monitor_bound_theorem1(out.estimates, out.truth, scenario.xbar0, rho);
      out.bound.alpha = alphas.c;
      out.bound.lambda = std::pow(spec.beta_x.eta_b(), alphas.c);
    } else {
      rho = make_rho_recursive(betas, spec.horizon);
      out.bound = monitor_bound_theorem1(out.estimates, out.truth, scenario.xbar0, rho);
    }
  }
  return out;
}

}  // namespace mhe

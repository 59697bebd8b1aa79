#include "mhe/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "mhe/errors.hpp"
#include "mhe/random.hpp"

namespace mhe {

// --- comparison functions -------------------------------------------------

ComparisonFunction::ComparisonFunction(Family f, double a, double shape)
    : family_(f), a_(a), shape_(shape) {
  MHE_REQUIRE(a > 0.0 && std::isfinite(a),
              "ComparisonFunction: coefficient must be positive");
  MHE_REQUIRE(shape > 0.0 && std::isfinite(shape),
              "ComparisonFunction: shape parameter must be positive");
}

ComparisonFunction ComparisonFunction::power(double a, double q) {
  return ComparisonFunction(Family::kPower, a, q);
}

ComparisonFunction ComparisonFunction::log_quadratic(double a, double c) {
  return ComparisonFunction(Family::kLogQuadratic, a, c);
}

double ComparisonFunction::operator()(double s) const {
  if (s <= 0.0) return 0.0;
  if (family_ == Family::kPower) return a_ * std::pow(s, shape_);
  return a_ * std::log1p(shape_ * s * s);
}

double ComparisonFunction::inverse(double r) const {
  if (r <= 0.0) return 0.0;
  if (family_ == Family::kPower) return std::pow(r / a_, 1.0 / shape_);
  return std::sqrt(std::expm1(r / a_) / shape_);
}

namespace {

// a * s^q, the closure of the supply compositions.
struct PowerTerm {
  double a = 0.0;
  double q = 1.0;
};

PowerTerm as_power(const ComparisonFunction& f, const char* what) {
  if (f.family() != ComparisonFunction::Family::kPower) {
    throw ContractViolation(std::string("derive_betas: ") + what +
                            " must be a power function");
  }
  return {f.a(), f.shape()};
}

// outer o inner^{-1} for two comparison functions.
PowerTerm ratio_map(const ComparisonFunction& outer,
                    const ComparisonFunction& inner) {
  using F = ComparisonFunction::Family;
  if (outer.family() == F::kPower && inner.family() == F::kPower) {
    const double p = outer.shape() / inner.shape();
    return {outer.a() * std::pow(inner.a(), -p), p};
  }
  if (outer.family() == F::kLogQuadratic &&
      inner.family() == F::kLogQuadratic && outer.shape() == inner.shape()) {
    return {outer.a() / inner.a(), 1.0};
  }
  throw ContractViolation(
      "derive_betas: composition leaves the power/log-quadratic families");
}

PowerTerm compose(const PowerTerm& outer, const PowerTerm& inner) {
  return {outer.a * std::pow(inner.a, outer.q), outer.q * inner.q};
}

PowerTerm add(const PowerTerm& x, const PowerTerm& y) {
  if (std::abs(x.q - y.q) > 1e-15 * std::max(1.0, std::abs(x.q))) {
    throw ContractViolation("derive_betas: cannot add powers of different order");
  }
  return {x.a + y.a, x.q};
}

PowerTerm scale(double k, const PowerTerm& x) { return {k * x.a, x.q}; }

// alpha1^{-1}(lambda^t * C s^p).
KLFunction beta_from_supply(const ComparisonFunction& alpha1,
                            const PowerTerm& inner, double lambda) {
  if (alpha1.family() == ComparisonFunction::Family::kPower) {
    const double q1 = alpha1.shape();
    return KLFunction::power(std::pow(inner.a / alpha1.a(), 1.0 / q1),
                             inner.q / q1, std::pow(lambda, 1.0 / q1));
  }
  return KLFunction::log_supply(inner.a / alpha1.a(), inner.q, lambda,
                                alpha1.shape());
}

}  // namespace

// --- dissipation ----------------------------------------------------------

namespace {

constexpr std::uint64_t kDissipationStream = 0x4449535349ULL;  // "DISSI"
constexpr std::uint64_t kCertStream = 0x43455254ULL;           // "CERT"

VectorXd draw_box(const Box& box, const CounterRng& rng, std::uint64_t base) {
  VectorXd out(box.dim());
  for (int c = 0; c < box.dim(); ++c) {
    out[c] = rng.uniform(base + c, box.lower[c], box.upper[c]);
  }
  return out;
}

}  // namespace

DissipationResult check_dissipation(const SystemModel& model,
                                    const LyapunovSpec& spec,
                                    const DissipationDomains& domains,
                                    std::int64_t samples, std::uint64_t seed,
                                    Execution exec) {
  MHE_REQUIRE(static_cast<bool>(spec.V), "check_dissipation: V is empty");
  MHE_REQUIRE(samples >= 1, "check_dissipation: need at least one sample");
  MHE_REQUIRE(domains.state.dim() == model.n() &&
                  domains.process_noise.dim() == model.nw() &&
                  domains.input.dim() == model.p(),
              "check_dissipation: domain dimensions do not match the model");
  MHE_REQUIRE(domains.state.is_bounded() && domains.process_noise.is_bounded() &&
                  domains.input.is_bounded(),
              "check_dissipation: sample boxes must be finite");
  const bool extended = spec.extended();
  if (extended) {
    MHE_REQUIRE(domains.measurement_noise.dim() == model.nv() &&
                    domains.measurement_noise.is_bounded(),
                "check_dissipation: extended check needs a finite noise box");
  }
  const int n = model.n();
  const int nw = model.nw();
  const int nv = model.nv();
  const int p = model.p();
  const std::uint64_t stride = 2 * n + 2 * nw + p + (extended ? 2 * nv : 0);
  const CounterRng rng(seed, kDissipationStream);

  struct Sample {
    VectorXd x, z, wx, wz, u, vx, vz;
  };
  const auto draw = [&](std::int64_t i) {
    std::uint64_t base = static_cast<std::uint64_t>(i) * stride;
    Sample s;
    s.x = draw_box(domains.state, rng, base);
    base += n;
    s.z = draw_box(domains.state, rng, base);
    base += n;
    s.wx = draw_box(domains.process_noise, rng, base);
    base += nw;
    s.wz = draw_box(domains.process_noise, rng, base);
    base += nw;
    s.u = draw_box(domains.input, rng, base);
    base += p;
    if (extended) {
      s.vx = draw_box(domains.measurement_noise, rng, base);
      base += nv;
      s.vz = draw_box(domains.measurement_noise, rng, base);
    } else {
      s.vx = VectorXd::Zero(nv);
      s.vz = VectorXd::Zero(nv);
    }
    return s;
  };
  const auto residual = [&](const Sample& s) {
    const VectorXd fx = model.f<double>(s.x, s.u, s.wx);
    const VectorXd fz = model.f<double>(s.z, s.u, s.wz);
    const VectorXd hx = model.h<double>(s.x, s.vx);
    const VectorXd hz = model.h<double>(s.z, s.vz);
    double rhs = spec.V(s.x, s.z) - spec.alpha3((s.x - s.z).norm()) +
                 spec.sigma_w((s.wx - s.wz).norm()) +
                 spec.sigma_y((hx - hz).norm());
    if (extended) rhs += (*spec.sigma_v)((s.vx - s.vz).norm());
    return spec.V(fx, fz) - rhs;
  };

  const ArgMax worst =
      argmax_over(samples, exec, [&](std::int64_t i) { return residual(draw(i)); });

  DissipationResult out;
  out.samples = samples;
  out.worst_index = worst.index;
  out.max_residual = worst.index >= 0 ? worst.value
                                      : std::numeric_limits<double>::quiet_NaN();
  if (worst.index >= 0) {
    Sample s = draw(worst.index);
    out.x = std::move(s.x);
    out.z = std::move(s.z);
    out.wx = std::move(s.wx);
    out.wz = std::move(s.wz);
    out.u = std::move(s.u);
    out.vx = std::move(s.vx);
    out.vz = std::move(s.vz);
  }
  return out;
}

// --- beta construction ----------------------------------------------------

BetaSet derive_betas(const LyapunovSpec& spec, bool extended) {
  MHE_REQUIRE(!extended || spec.sigma_v.has_value(),
              "derive_betas: extended construction needs sigma_v");
  // sigma(s) = s - alpha3(alpha2^{-1}(s)) / 2 must be linear and contracting.
  const PowerTerm decrease = ratio_map(spec.alpha3, spec.alpha2);
  if (std::abs(decrease.q - 1.0) > 1e-12) {
    throw ContractViolation(
        "derive_betas: alpha3 and alpha2 must have the same order");
  }
  const double lambda = 1.0 - 0.5 * decrease.a;
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ContractViolation(
        "derive_betas: sigma(s) = s - alpha3(alpha2^{-1}(s))/2 is not a "
        "contraction (rate " + std::to_string(lambda) + ")");
  }

  const PowerTerm gain = ratio_map(spec.alpha2, spec.alpha3);
  const PowerTerm sw = as_power(spec.sigma_w, "sigma_w");
  const PowerTerm sy = as_power(spec.sigma_y, "sigma_y");

  BetaSet out;
  out.sigma_rate = lambda;
  using F = ComparisonFunction::Family;
  if (spec.alpha2.family() == F::kPower) {
    out.beta_x = beta_from_supply(spec.alpha1, {spec.alpha2.a(), spec.alpha2.shape()},
                                  lambda);
  } else if (spec.alpha1.family() == F::kLogQuadratic &&
             spec.alpha1.shape() == spec.alpha2.shape()) {
    out.beta_x = KLFunction::log_state(spec.alpha2.a() / spec.alpha1.a(), lambda,
                                       spec.alpha1.shape());
  } else {
    throw ContractViolation("derive_betas: unsupported alpha1/alpha2 pair");
  }

  if (!extended) {
    // 2 alpha2(alpha3^{-1}(4 sigma_w(s))) + 2 sigma_l(s)
    const PowerTerm common = scale(2.0, compose(gain, scale(4.0, sw)));
    out.beta_w = beta_from_supply(spec.alpha1, add(common, scale(2.0, sw)), lambda);
    out.beta_y = beta_from_supply(spec.alpha1, add(common, scale(2.0, sy)), lambda);
    return out;
  }

  // phi_l(s) = 3 alpha2(alpha3^{-1}(6 sigma_l(s))) + 3 sigma_l(s)
  const auto phi = [&](const PowerTerm& sl) {
    return add(scale(3.0, compose(gain, scale(6.0, sl))), scale(3.0, sl));
  };
  const PowerTerm sv = as_power(*spec.sigma_v, "sigma_v");
  out.beta_w = beta_from_supply(spec.alpha1, phi(sw), lambda);
  out.beta_y = beta_from_supply(spec.alpha1, phi(sy), lambda);
  out.beta_v = beta_from_supply(spec.alpha1, phi(sv), lambda);
  return out;
}

int min_window_theorem1(double eta_kl, double factor) {
  MHE_REQUIRE(eta_kl > 0.0 && eta_kl < 1.0,
              "min_window_theorem1: eta must lie in (0,1)");
  MHE_REQUIRE(factor > 0.0, "min_window_theorem1: factor must be positive");
  int n = 1;
  while (!(factor * std::pow(eta_kl, n) < 1.0)) {
    MHE_REQUIRE(n < std::numeric_limits<int>::max() / 2,
                "min_window_theorem1: window length overflow");
    ++n;
  }
  return n;
}

// --- exponential parameter synthesis --------------------------------------

void ExponentialCertificate::validate() const {
  MHE_REQUIRE(c_x > 0.0 && c_v > 0.0 && c_w > 0.0,
              "certificate constants must be positive");
  MHE_REQUIRE(eta > 0.0 && eta < 1.0, "certificate eta must lie in (0,1)");
}

namespace {

int min_contraction_window(double mu, double eta) {
  int n = 1;
  while (!(4.0 * mu * std::pow(eta, n) < 1.0)) ++n;
  return n;
}

}  // namespace

CostParameters select_parameters_theorem3(const ExponentialCertificate& cert) {
  cert.validate();
  CostParameters out;
  out.mu = cert.c_x + 1.0;
  out.nu = cert.c_v / 2.0;
  out.omega = cert.c_w + cert.eta;
  out.n_min = min_contraction_window(out.mu, cert.eta);
  return out;
}

CostParameters select_parameters_theorem2(const ExponentialCertificate& cert) {
  cert.validate();
  CostParameters out;
  out.mu = cert.c_x;
  out.nu = cert.c_v / 2.0;
  out.omega = cert.c_w;
  out.n_min = min_contraction_window(out.mu, cert.eta);
  return out;
}

RationalCostParameters select_parameters_theorem3(const Rational& c_x,
                                                  const Rational& c_v,
                                                  const Rational& c_w,
                                                  const Rational& eta) {
  MHE_REQUIRE(c_x > 0 && c_v > 0 && c_w > 0,
              "certificate constants must be positive");
  MHE_REQUIRE(eta > 0 && eta < 1, "certificate eta must lie in (0,1)");
  RationalCostParameters out;
  out.mu = c_x + 1;
  out.nu = c_v / 2;
  out.omega = c_w + eta;
  Rational power = eta;
  int n = 1;
  while (!(4 * out.mu * power < 1)) {
    power *= eta;
    ++n;
    MHE_REQUIRE(n < 100000, "select_parameters_theorem3: N_min too large");
  }
  out.n_min = n;
  return out;
}

std::string check_theorem3_conditions(const ExponentialCertificate& cert,
                                      double mu, double nu, double omega,
                                      double eta, int horizon) {
  cert.validate();
  if (!(mu >= cert.c_x + 1.0)) return "mu >= c_x + 1 violated";
  if (!(nu >= cert.c_v / 2.0)) return "nu >= c_v / 2 violated";
  if (!(omega >= cert.c_w + cert.eta)) return "omega >= c_w + eta violated";
  if (!(eta >= cert.eta)) return "cost discount below the certificate eta";
  if (!(4.0 * mu * std::pow(eta, horizon) < 1.0)) {
    return "4 mu eta^N < 1 violated";
  }
  return {};
}

// --- window conditions for the max-form estimator -------------------------

Theorem1Alphas theorem1_alpha_candidates(const BetaSet& betas, int horizon,
                                         double theta) {
  MHE_REQUIRE(horizon >= 1, "theorem1_alpha_candidates: N must be >= 1");
  MHE_REQUIRE(theta > 0.0 && theta < 1.0,
              "theorem1_alpha_candidates: theta must lie in (0,1)");
  const double eta = betas.beta_x.eta_b();
  Theorem1Alphas out;
  const double c = 1.0 - std::log(theta / 2.0) / (horizon * std::log(eta));
  if (c > 0.0 && c < 1.0) {
    out.c = c;
    out.c_valid = true;
  }
  const double base = std::pow(eta, out.c);
  const KLFunction& bv = betas.beta_v ? *betas.beta_v : betas.beta_y;
  out.alpha_x = KLFunction::power(8.0 * betas.beta_x.kappa(), 1.0, base);
  out.alpha_w = KLFunction::power(8.0 * betas.beta_w.kappa(), 1.0, base);
  out.alpha_v = KLFunction::power(8.0 * bv.kappa(), 1.0, base);
  return out;
}

Theorem1Check check_theorem1_conditions(const BetaSet& betas,
                                        const Theorem1Alphas& alphas,
                                        int horizon) {
  MHE_REQUIRE(horizon >= 1, "check_theorem1_conditions: N must be >= 1");
  const KLFunction& bv = betas.beta_v ? *betas.beta_v : betas.beta_y;
  const KLFunction* chan_beta[3] = {&betas.beta_x, &betas.beta_w, &bv};
  const KLFunction* chan_alpha[3] = {&alphas.alpha_x, &alphas.alpha_w,
                                     &alphas.alpha_v};

  std::vector<double> grid{0.0};
  constexpr int kPoints = 121;
  for (int i = 0; i < kPoints; ++i) {
    grid.push_back(std::pow(10.0, -6.0 + 12.0 * i / (kPoints - 1)));
  }

  Theorem1Check out;
  out.grid_pass = true;
  const double N = horizon;
  for (int ch = 0; ch < 3 && out.grid_pass; ++ch) {
    const KLFunction& beta = *chan_beta[ch];
    const KLFunction& alpha = *chan_alpha[ch];
    for (int k = 0; k <= 200 && out.grid_pass; ++k) {
      for (double s : grid) {
        const double rhs = alpha(s, k + N);
        const double lhs_a = betas.beta_x(4.0 * beta(2.0 * s, k), N);
        const double lhs_b = betas.beta_x(2.0 * alpha(s, k), N);
        out.evaluations += 2;
        const double tol = 1e-12 * std::abs(rhs);
        if (lhs_a > rhs + tol) {
          out.grid_pass = false;
          out.witness = Theorem1Violation{2 * ch + 1, s, k, lhs_a, rhs};
          break;
        }
        if (lhs_b > rhs + tol) {
          out.grid_pass = false;
          out.witness = Theorem1Violation{2 * ch + 2, s, k, lhs_b, rhs};
          break;
        }
      }
    }
  }

  // Scaled-linear family: every beta is kappa s eta^k with a common eta, and
  // the conditions reduce to 2 eta^N < 1 with alpha_l = 8 kappa_l s (eta^c)^k.
  bool linear = true;
  const double eta = betas.beta_x.eta_b();
  for (const KLFunction* b : chan_beta) {
    linear = linear && b->family() == KLFunction::Family::kPower &&
             b->q() == 1.0 && b->eta_b() == eta;
  }
  if (linear) {
    bool alphas_ok = alphas.c_valid;
    for (int ch = 0; ch < 3; ++ch) {
      const KLFunction& a = *chan_alpha[ch];
      alphas_ok = alphas_ok && a.family() == KLFunction::Family::kPower &&
                  a.q() == 1.0 && a.kappa() >= 8.0 * chan_beta[ch]->kappa() &&
                  a.eta_b() >= eta;
    }
    out.closed_form_pass = 2.0 * std::pow(eta, horizon) < 1.0 && alphas_ok &&
                           2.0 * std::pow(eta / alphas.alpha_x.eta_b(), horizon) <= 1.0;
  }
  return out;
}

// --- certificate program --------------------------------------------------

double certificate_ratio(const SystemModel& model, const CertificateConstants& c,
                         const CertificatePoint& p, double min_separation) {
  const double sep = (p.x - p.z).norm();
  if (!(sep >= min_separation)) return -std::numeric_limits<double>::infinity();
  const VectorXd u = VectorXd::Zero(model.p());
  const VectorXd fx = model.f<double>(p.x, u, p.wx);
  const VectorXd fz = model.f<double>(p.z, u, p.wz);
  const double num = std::log1p(c.c1 * (fx - fz).squaredNorm()) -
                     c.c_w * (p.wx - p.wz).norm() -
                     c.c_y * (model.h<double>(p.x, p.vx) -
                              model.h<double>(p.z, p.vz)).norm() -
                     c.c_v * (p.vx - p.vz).norm();
  return num / std::log1p(c.c1 * sep * sep);
}

namespace {

struct PointLayout {
  int n, nw, nv;
  int size() const { return 2 * n + 2 * nw + 2 * nv; }

  CertificatePoint unpack(const VectorXd& v) const {
    CertificatePoint p;
    int o = 0;
    p.x = v.segment(o, n);
    o += n;
    p.z = v.segment(o, n);
    o += n;
    p.wx = v.segment(o, nw);
    o += nw;
    p.wz = v.segment(o, nw);
    o += nw;
    p.vx = v.segment(o, nv);
    o += nv;
    p.vz = v.segment(o, nv);
    return p;
  }
};

Box point_box(const CertificateDomains& d) {
  return Box::stack({d.state, d.state, d.process_noise, d.process_noise,
                     d.measurement_noise, d.measurement_noise});
}

void check_domains(const SystemModel& model, const CertificateDomains& d) {
  MHE_REQUIRE(d.state.dim() == model.n() && d.process_noise.dim() == model.nw() &&
                  d.measurement_noise.dim() == model.nv(),
              "certificate: domain dimensions do not match the model");
  MHE_REQUIRE(d.state.is_bounded() && d.process_noise.is_bounded() &&
                  d.measurement_noise.is_bounded(),
              "certificate: domains must be bounded");
  MHE_REQUIRE(d.min_separation > 0.0, "certificate: exclusion radius must be > 0");
}

VectorXd draw_point(const Box& box, const CounterRng& rng, std::int64_t i) {
  return draw_box(box, rng, static_cast<std::uint64_t>(i) * box.dim());
}

}  // namespace

SupEstimate sampled_certificate_sup(const SystemModel& model,
                                    const CertificateConstants& c,
                                    const CertificateDomains& domains,
                                    std::int64_t samples, std::uint64_t seed,
                                    Execution exec) {
  check_domains(model, domains);
  MHE_REQUIRE(samples >= 1, "sampled_certificate_sup: need samples");
  const PointLayout layout{model.n(), model.nw(), model.nv()};
  const Box box = point_box(domains);
  const CounterRng rng(seed, kCertStream);
  const ArgMax best = argmax_over(samples, exec, [&](std::int64_t i) {
    return certificate_ratio(model, c, layout.unpack(draw_point(box, rng, i)),
                             domains.min_separation);
  });
  SupEstimate out;
  out.samples = samples;
  out.value = best.value;
  if (best.index >= 0) out.argmax = layout.unpack(draw_point(box, rng, best.index));
  return out;
}

SupEstimate inner_certificate_sup(const SystemModel& model,
                                  const CertificateConstants& c,
                                  const CertificateDomains& domains,
                                  const CertificateSearchOptions& opts) {
  check_domains(model, domains);
  MHE_REQUIRE(opts.presamples >= 1 && opts.starts >= 1 && opts.pattern_iters >= 0,
              "inner_certificate_sup: invalid search sizes");
  const PointLayout layout{model.n(), model.nw(), model.nv()};
  const Box box = point_box(domains);
  const CounterRng rng(opts.seed, kCertStream);
  const auto F = [&](const VectorXd& v) {
    return certificate_ratio(model, c, layout.unpack(v), domains.min_separation);
  };

  std::vector<double> pre(opts.presamples);
  for_each_index(opts.presamples, opts.execution, [&](std::int64_t i) {
    const double v = F(draw_point(box, rng, i));
    pre[i] = std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  });
  std::vector<int> order(opts.presamples);
  std::iota(order.begin(), order.end(), 0);
  const int starts = std::min(opts.starts, opts.presamples);
  std::partial_sort(order.begin(), order.begin() + starts, order.end(),
                    [&](int a, int b) {
                      return pre[a] > pre[b] || (pre[a] == pre[b] && a < b);
                    });

  const VectorXd width = box.upper - box.lower;
  std::vector<VectorXd> final_point(starts);
  std::vector<double> final_value(starts);
  for_each_index(starts, opts.execution, [&](std::int64_t s) {
    VectorXd p = draw_point(box, rng, order[s]);
    double fp = pre[order[s]];
    VectorXd step = 0.25 * width;
    for (int it = 0; it < opts.pattern_iters; ++it) {
      double best = fp;
      VectorXd best_p;
      for (int d = 0; d < p.size(); ++d) {
        for (double sign : {1.0, -1.0}) {
          VectorXd q = p;
          q[d] = std::clamp(q[d] + sign * step[d], box.lower[d], box.upper[d]);
          const double fq = F(q);
          if (fq > best) {
            best = fq;
            best_p = std::move(q);
          }
        }
      }
      if (best_p.size() > 0) {
        p = std::move(best_p);
        fp = best;
      } else {
        step *= 0.5;
        if ((step.array() <= 1e-9 * width.array()).all()) break;
      }
    }
    final_point[s] = std::move(p);
    final_value[s] = fp;
  });

  ArgMax best;
  for (int s = 0; s < starts; ++s) best.offer(s, final_value[s]);
  SupEstimate out;
  out.samples = opts.presamples;
  out.value = best.value;
  if (best.index >= 0) out.argmax = layout.unpack(final_point[best.index]);
  return out;
}

LyapunovSpec Certificate::lyapunov_spec() const {
  LyapunovSpec spec;
  const double c1 = constants.c1;
  spec.V = [c1](const VectorXd& x, const VectorXd& z) {
    return std::log1p(c1 * (x - z).squaredNorm());
  };
  spec.alpha1 = ComparisonFunction::log_quadratic(1.0, c1);
  spec.alpha2 = ComparisonFunction::log_quadratic(1.0, c1);
  spec.alpha3 = ComparisonFunction::log_quadratic(1.0 - c0, c1);
  spec.sigma_w = ComparisonFunction::power(constants.c_w, 1.0);
  spec.sigma_y = ComparisonFunction::power(constants.c_y, 1.0);
  spec.sigma_v = ComparisonFunction::power(constants.c_v, 1.0);
  return spec;
}

Certificate make_certificate(const CertificateConstants& c, double c0) {
  MHE_REQUIRE(c.c1 > 0.0 && c.c_w > 0.0 && c.c_y > 0.0 && c.c_v > 0.0,
              "make_certificate: constants must be positive");
  Certificate out;
  out.constants = c;
  out.c0 = c0;
  out.accepted = c0 > 0.0 && c0 < 1.0;
  return out;
}

Certificate certificate_search(const SystemModel& model,
                               const CertificateDomains& domains,
                               const CertificateSearchOptions& opts) {
  MHE_REQUIRE(opts.constant_box.dim() == 4 && opts.constant_box.is_bounded(),
              "certificate_search: constant box must be a bounded 4-box");
  const Box& cb = opts.constant_box;
  const auto pack = [](const CertificateConstants& c) {
    return Eigen::Vector4d(c.c1, c.c_w, c.c_y, c.c_v);
  };
  const auto unpack = [](const VectorXd& v) {
    return CertificateConstants{v[0], v[1], v[2], v[3]};
  };

  Certificate out;
  VectorXd c = cb.clamp(pack(opts.initial));
  SupEstimate cur = inner_certificate_sup(model, unpack(c), domains, opts);
  ++out.outer_evaluations;
  VectorXd step = 0.25 * (cb.upper - cb.lower);
  for (int sweep = 0; sweep < opts.outer_sweeps; ++sweep) {
    bool improved = false;
    for (int d = 0; d < 4; ++d) {
      for (double sign : {1.0, -1.0}) {
        VectorXd trial = c;
        trial[d] = std::clamp(trial[d] + sign * step[d], cb.lower[d], cb.upper[d]);
        if (trial[d] == c[d]) continue;
        if (d == 0 && trial[d] <= 0.0) continue;
        SupEstimate est = inner_certificate_sup(model, unpack(trial), domains, opts);
        ++out.outer_evaluations;
        if (est.value < cur.value) {
          c = trial;
          cur = std::move(est);
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  out.constants = unpack(c);
  out.c0 = cur.value;
  out.witness = cur.argmax;
  out.accepted = cur.value > 0.0 && cur.value < 1.0;
  return out;
}

}  // namespace mhe

#include "mhe/optimize.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mhe/errors.hpp"
#include "mhe/random.hpp"

namespace mhe {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

StopRule StopRule::exact(int max_iters) {
  StopRule r;
  r.mode = StopMode::kExact;
  r.max_iters = max_iters;
  return r;
}

StopRule StopRule::relaxed(double epsilon_hat, int max_iters) {
  StopRule r;
  r.mode = StopMode::kRelaxed;
  r.epsilon_hat = epsilon_hat;
  r.max_iters = max_iters;
  return r;
}

void StopRule::validate() const {
  MHE_REQUIRE(epsilon_hat >= 0.0, "StopRule: epsilon_hat must be >= 0");
  MHE_REQUIRE(max_iters >= 1, "StopRule: iteration cap must be >= 1");
}

bool OptimReport::monotone() const {
  for (std::size_t k = 1; k < cost_trace.size(); ++k) {
    if (cost_trace[k] > cost_trace[k - 1]) return false;
  }
  return true;
}

LineSearchResult line_search_exact(const std::function<double(double)>& phi,
                                   const LineSearchOptions& opts) {
  LineSearchResult res;
  double best_alpha = 0.0;
  double best_value = std::numeric_limits<double>::infinity();
  auto eval = [&](double a) {
    const double v = phi(a);
    ++res.evals;
    if (std::isnan(v)) {
      throw NumericalError("line_search_exact: objective is NaN at alpha=" +
                           std::to_string(a));
    }
    if (v < best_value) {
      best_value = v;
      best_alpha = a;
    }
    return v;
  };

  const double f0 = eval(0.0);
  if (std::isinf(f0) && f0 > 0) {
    throw NumericalError("line_search_exact: objective is infinite at alpha=0");
  }
  double lo = 0.0;
  double hi = opts.initial_step;
  double fcur = eval(hi);
  if (fcur < f0) {
    // Expand until the objective stops decreasing.
    const double cap = opts.initial_step * opts.max_growth;
    double prev = 0.0;
    double cur = hi;
    while (true) {
      const double next = 2.0 * cur;
      if (next > cap) {
        res.hit_cap = true;
        res.alpha = best_alpha;
        res.value = best_value;
        return res;
      }
      const double fnext = eval(next);
      if (!(fnext < fcur)) {
        lo = prev;
        hi = next;
        break;
      }
      prev = cur;
      cur = next;
      fcur = fnext;
    }
  }

  // Golden-section search on [lo, hi].
  constexpr double kInvPhi = 0.6180339887498949;
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = eval(c);
  double fd = eval(d);
  for (int it = 0; it < 300; ++it) {
    const double scale = std::max(0.5 * (lo + hi), opts.initial_step * 1e-10);
    if (hi - lo <= opts.relative_tolerance * scale) break;
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = eval(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = eval(d);
    }
  }
  res.alpha = best_alpha;
  res.value = best_value;
  return res;
}

VectorXd projected_gradient(const VectorXd& z, const VectorXd& g,
                            const Box& box) {
  VectorXd pg = g;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z[i] <= box.lower[i] && g[i] > 0.0) pg[i] = 0.0;
    if (z[i] >= box.upper[i] && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

std::pair<VectorXd, OptimReport> descend(const Objective& J,
                                         const GradientFn& grad,
                                         const VectorXd& z0, const Box& box,
                                         const StopRule& stop) {
  stop.validate();
  MHE_REQUIRE(box.dim() == z0.size(), "descend: box dimension mismatch");
  OptimReport rep;
  VectorXd z = box.clamp(z0);
  double f = J(z);
  if (!std::isfinite(f)) {
    throw NumericalError("descend: objective is not finite at the start");
  }
  rep.cost_trace.push_back(f);
  const double threshold = stop.threshold();
  const bool bounded = !box.lower.isConstant(-kInf) || !box.upper.isConstant(kInf);
  VectorXd trial(z.size());
  while (true) {
    const VectorXd g = grad(z);
    ++rep.gradient_evals;
    rep.grad_norm = projected_gradient(z, g, box).norm();
    if (rep.grad_norm <= threshold) break;
    if (rep.iterations >= stop.max_iters) {
      rep.hit_cap = true;
      break;
    }
    const auto phi = [&](double a) {
      trial = z - a * g;
      if (bounded) box.clamp_in_place(trial);
      return J(trial);
    };
    const LineSearchResult ls = line_search_exact(phi);
    rep.line_search_evals += ls.evals;
    if (!(ls.value < f)) {
      rep.stalled = true;
      rep.hit_cap = true;
      break;
    }
    z = box.clamp(z - ls.alpha * g);
    f = ls.value;
    ++rep.iterations;
    rep.cost_trace.push_back(f);
  }
  rep.cost = f;
  return {z, rep};
}

double epsilon_schedule(double epsilon, double eta, double mu, int horizon,
                        long t) {
  MHE_REQUIRE(epsilon > 0.0, "epsilon_schedule: epsilon must be positive");
  MHE_REQUIRE(eta > 0.0 && eta < 1.0, "epsilon_schedule: eta must lie in (0,1)");
  MHE_REQUIRE(mu > 0.0, "epsilon_schedule: mu must be positive");
  MHE_REQUIRE(horizon >= 1 && t >= 1, "epsilon_schedule: N and t must be >= 1");
  const double contraction = 4.0 * mu * std::pow(eta, horizon);
  MHE_REQUIRE(contraction < 1.0,
              "epsilon_schedule: requires 4 mu eta^N < 1");
  if (t <= horizon) return epsilon * std::pow(eta, 0.5 * static_cast<double>(t));
  return epsilon * std::pow(eta, 0.5 * horizon) * std::sqrt(1.0 - contraction);
}

namespace {

constexpr std::uint64_t kStartStream = 0x5354415254ULL;    // "START"
constexpr std::uint64_t kConvexStream = 0x434F4E564558ULL;  // "CONVEX"

VectorXd sample_start(const Box& box, const VectorXd& center, double spread,
                      const CounterRng& rng, std::uint64_t start) {
  const Eigen::Index d = center.size();
  VectorXd z(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    double lo = box.lower[c];
    double hi = box.upper[c];
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      lo = std::max(lo, center[c] - spread);
      hi = std::min(hi, center[c] + spread);
    }
    z[c] = rng.uniform(start * static_cast<std::uint64_t>(d) + c, lo, hi);
  }
  return z;
}

}  // namespace

MultistartResult minimize_multistart(const Objective& truth,
                                     const SmoothedFamily& family,
                                     const VectorXd& first_start,
                                     const Box& box,
                                     const MultistartOptions& opts) {
  MHE_REQUIRE(opts.starts >= 1, "minimize_multistart: need at least one start");
  MHE_REQUIRE(!opts.tau_ladder.empty(), "minimize_multistart: empty tau ladder");
  for (double tau : opts.tau_ladder) {
    MHE_REQUIRE(tau > 0.0, "minimize_multistart: tau must be positive");
  }
  const CounterRng rng(opts.seed, kStartStream);
  const VectorXd center = box.clamp(first_start);

  struct Outcome {
    VectorXd z;
    double value = std::numeric_limits<double>::infinity();
    OptimReport report;
    long iterations = 0;
    std::string error;
  };
  std::vector<Outcome> outcomes(opts.starts);

  for_each_index(opts.starts, opts.execution, [&](std::int64_t s) {
    Outcome& out = outcomes[s];
    try {
      VectorXd z = s == 0 ? center
                          : sample_start(box, center, opts.unbounded_spread,
                                         rng, static_cast<std::uint64_t>(s));
      long line_evals = 0;
      for (double tau : opts.tau_ladder) {
        const Objective J = [&](const VectorXd& x) { return family.value(x, tau); };
        const GradientFn G = [&](const VectorXd& x) {
          return family.gradient(x, tau);
        };
        auto [zn, rep] = descend(J, G, z, box, opts.stage_stop);
        z = std::move(zn);
        out.iterations += rep.iterations;
        line_evals += rep.line_search_evals;
        out.report = std::move(rep);
      }
      out.report.iterations = static_cast<int>(out.iterations);
      out.report.line_search_evals = line_evals;
      out.value = truth(z);
      out.report.cost = out.value;
      out.z = std::move(z);
      if (std::isnan(out.value)) {
        out.value = std::numeric_limits<double>::infinity();
        out.error = "objective is NaN at the final point";
      }
    } catch (const std::exception& e) {
      out.error = e.what();
      out.value = std::numeric_limits<double>::infinity();
    }
  });

  MultistartResult result;
  for (int s = 0; s < opts.starts; ++s) {
    result.start_values.push_back(outcomes[s].value);
    result.total_iterations += outcomes[s].iterations;
    if (!outcomes[s].error.empty() || outcomes[s].z.size() == 0) continue;
    if (result.best_start < 0 || outcomes[s].value < result.best_value) {
      result.best_start = s;
      result.best_value = outcomes[s].value;
    }
  }
  if (result.best_start < 0) {
    std::string msg = "minimize_multistart: every start failed:";
    for (int s = 0; s < opts.starts; ++s) {
      msg += " [" + std::to_string(s) + "] " + outcomes[s].error;
    }
    throw NumericalError(msg);
  }
  result.best = outcomes[result.best_start].z;
  result.report = outcomes[result.best_start].report;
  return result;
}

ConvexityVerdict convexity_falsifier(const Objective& g, const Box& box,
                                     std::int64_t samples, std::uint64_t seed,
                                     Execution exec) {
  MHE_REQUIRE(box.is_bounded(), "convexity_falsifier: box must be bounded");
  MHE_REQUIRE(samples >= 1, "convexity_falsifier: need at least one sample");
  const CounterRng rng(seed, kConvexStream);
  const Eigen::Index d = box.dim();
  const auto draw = [&](std::int64_t i, VectorXd& xi, VectorXd& zeta,
                        double& tau) {
    const std::uint64_t base = static_cast<std::uint64_t>(i) * (2 * d + 1);
    xi.resize(d);
    zeta.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      xi[c] = rng.uniform(base + c, box.lower[c], box.upper[c]);
      zeta[c] = rng.uniform(base + d + c, box.lower[c], box.upper[c]);
    }
    tau = rng.uniform(base + 2 * d);
  };
  const auto gap = [&](const VectorXd& xi, const VectorXd& zeta, double tau) {
    return tau * g(xi) + (1.0 - tau) * g(zeta) - g(tau * xi + (1.0 - tau) * zeta);
  };
  const ArgMax worst = argmax_over(samples, exec, [&](std::int64_t i) {
    VectorXd xi, zeta;
    double tau = 0.0;
    draw(i, xi, zeta, tau);
    return -gap(xi, zeta, tau);
  });

  ConvexityVerdict verdict;
  verdict.samples = samples;
  verdict.min_gap = -worst.value;
  if (worst.index >= 0 && verdict.min_gap < -1e-9) {
    ConvexityWitness w;
    draw(worst.index, w.xi, w.zeta, w.tau);
    w.gap = verdict.min_gap;
    verdict.witness = std::move(w);
  }
  return verdict;
}

}  // namespace mhe

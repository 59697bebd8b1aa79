#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mhe/model.hpp"
#include "mhe/parallel.hpp"

namespace mhe {

enum class StopMode { kExact, kRelaxed };

/// Termination rule of the gradient method. Exact stopping (zero gradient)
/// is realised as a gradient-norm threshold of 1e-9.
struct StopRule {
  static constexpr double kExactThreshold = 1e-9;

  StopMode mode = StopMode::kExact;
  double epsilon_hat = 0.0;  // used in Relaxed mode
  int max_iters = 5000;

  static StopRule exact(int max_iters = 5000);
  static StopRule relaxed(double epsilon_hat, int max_iters = 5000);

  double threshold() const {
    return mode == StopMode::kExact ? kExactThreshold : epsilon_hat;
  }
  void validate() const;
};

struct OptimReport {
  int iterations = 0;
  double grad_norm = 0.0;
  double cost = 0.0;
  bool hit_cap = false;
  bool stalled = false;  // line search found no decrease before the cap
  long line_search_evals = 0;
  long gradient_evals = 0;
  std::vector<double> cost_trace;  // J(z_0), J(z_1), ...

  bool monotone() const;
};

using Objective = std::function<double(const VectorXd&)>;
using GradientFn = std::function<VectorXd(const VectorXd&)>;

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  long evals = 0;
  bool hit_cap = false;  // no increase found before the bracket cap
};

struct LineSearchOptions {
  double initial_step = 1e-8;
  double max_growth = 0x1.0p60;  // bracket cap = initial_step * max_growth
  double relative_tolerance = 1e-10;
};

/// Minimisation rule along a ray: argmin_{alpha >= 0} phi(alpha).
///
/// Brackets by doubling from `initial_step` until phi increases, then
/// golden-section search. Returns the best point evaluated, so
/// phi(alpha*) <= phi(0) always. A NaN value raises NumericalError; +inf is
/// treated as an increase.
LineSearchResult line_search_exact(const std::function<double(double)>& phi,
                                   const LineSearchOptions& opts = {});

/// Gradient method with the minimisation rule on the projected path
/// alpha -> Pi_box(z - alpha g). Stops when the projected-gradient norm is
/// within the stop rule's threshold.
std::pair<VectorXd, OptimReport> descend(const Objective& J,
                                         const GradientFn& grad,
                                         const VectorXd& z0, const Box& box,
                                         const StopRule& stop);

/// Gradient with components that point out of the box at active bounds zeroed.
VectorXd projected_gradient(const VectorXd& z, const VectorXd& g,
                            const Box& box);

/// Stopping tolerance schedule for relaxed descent:
///   eps * eta^{t/2}                         t <= N
///   eps * eta^{N/2} * sqrt(1 - 4 mu eta^N)  t >  N
double epsilon_schedule(double epsilon, double eta, double mu, int horizon,
                        long t);

/// A family of smooth surrogates J_tau of a nonsmooth objective.
struct SmoothedFamily {
  std::function<double(const VectorXd&, double)> value;
  std::function<VectorXd(const VectorXd&, double)> gradient;
};

struct MultistartOptions {
  int starts = 8;
  std::vector<double> tau_ladder{1e-1, 1e-2, 1e-3, 1e-4};
  std::uint64_t seed = 0;
  StopRule stage_stop = StopRule::relaxed(1e-6, 500);
  /// Half-width of the sampling interval around the first start along
  /// unbounded coordinates.
  double unbounded_spread = 1.0;
  Execution execution = Execution::kParallel;
};

struct MultistartResult {
  VectorXd best;
  double best_value = 0.0;  // under the true objective
  int best_start = -1;
  OptimReport report;  // of the winning start, stages accumulated
  std::vector<double> start_values;
  long total_iterations = 0;
};

/// Runs `descend` on the surrogate with tau annealed over the ladder from
/// `first_start` and (starts - 1) seeded uniform samples of the box, and
/// returns the best final point under the unsmoothed objective `truth`.
/// Ties are broken by start index.
MultistartResult minimize_multistart(const Objective& truth,
                                     const SmoothedFamily& family,
                                     const VectorXd& first_start,
                                     const Box& box,
                                     const MultistartOptions& opts);

struct ConvexityWitness {
  VectorXd xi;
  VectorXd zeta;
  double tau = 0.0;
  double gap = 0.0;  // tau g(xi) + (1-tau) g(zeta) - g(mix); < 0 violates
};

struct ConvexityVerdict {
  std::optional<ConvexityWitness> witness;  // empty: none found (not a proof)
  std::int64_t samples = 0;
  double min_gap = 0.0;
};

/// Samples (xi, zeta, tau) uniformly and looks for a violated convexity
/// inequality (gap < -1e-9).
ConvexityVerdict convexity_falsifier(const Objective& g, const Box& box,
                                     std::int64_t samples, std::uint64_t seed,
                                     Execution exec = Execution::kParallel);

}  // namespace mhe

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "mhe/certify.hpp"
#include "mhe/cost.hpp"
#include "mhe/model.hpp"
#include "mhe/optimize.hpp"

namespace mhe {

using CostSpec = std::variant<QuadraticCostSpec, MaxFormCostSpec>;

struct EstimatorConfig {
  CostSpec cost = QuadraticCostSpec{};
  StopMode stop_mode = StopMode::kRelaxed;
  double epsilon = 0.01;
  VectorXd prior0;
  int max_iters = 20000;

  // max-form solver
  int starts = 8;
  std::vector<double> tau_ladder{1e-1, 1e-2, 1e-3, 1e-4};
  std::uint64_t seed = 0;
  int stage_max_iters = 100;
  Execution execution = Execution::kParallel;

  /// When present, the relaxed quadratic estimator checks the weight and
  /// window conditions against it at construction.
  std::optional<ExponentialCertificate> certificate;

  bool quadratic() const {
    return std::holds_alternative<QuadraticCostSpec>(cost);
  }
  int horizon() const;
  void validate(const SystemModel& model) const;
};

struct StepResult {
  long t = 0;
  VectorXd estimate;  // x_{t|t}
  WindowData window;
  VectorXd z;  // flattened minimiser
  std::vector<VectorXd> window_states;  // x_{t-M|t} .. x_{t|t}
  OptimReport report;
  double eps_hat = 0.0;  // gradient threshold used
  double cost = 0.0;     // objective at z
  int best_start = 0;    // max-form only
  bool on_noise_face = false;  // max-form: minimiser has all noise at zero
};

/// Moving-horizon estimator: keeps the last N measurement/input pairs and
/// the filtered estimates needed by the prior recursion
///   xbar_{t-M} = xbar_0            t <= N
///              = x_{t-N|t-N}       t >  N.
class MovingHorizonEstimator {
 public:
  MovingHorizonEstimator(SystemModel model, EstimatorConfig config);

  /// Appends (y_{t-1}, u_{t-1}) and returns x_{t|t}. For models without
  /// inputs `u` may be empty.
  StepResult step(const VectorXd& y, const VectorXd& u);

  long time() const { return t_; }
  const SystemModel& model() const { return model_; }
  const EstimatorConfig& config() const { return config_; }

  /// Prior used by the window ending at time t (t <= time() + 1).
  const VectorXd& prior_for(long t) const;

  DecisionLayout layout(int length) const;

  /// The objective minimised for `win` (quadratic or max-form).
  double objective(const WindowData& win, const VectorXd& z) const;

  /// Gradient threshold of the step at time t.
  double threshold(long t) const;

  /// Quadratic cost only: descent on `win` from the warm start (xbar, 0).
  std::pair<VectorXd, OptimReport> solve_quadratic(const WindowData& win,
                                                   const StopRule& stop) const;

 private:
  SystemModel model_;
  EstimatorConfig config_;
  long t_ = 0;
  std::deque<std::pair<VectorXd, VectorXd>> buffer_;  // (y, u), last N
  std::deque<VectorXd> estimates_;  // x_{k|k}, k = first_estimate_ ..
  long first_estimate_ = 1;
};

struct LambdaChoice {
  double alpha = 0.0;
  double lambda = 0.0;
};

/// alpha = ln(theta / (4 mu)) / (N ln eta) clipped to (0,1), lambda = eta^{1-alpha}.
LambdaChoice compute_lambda(double mu, double eta, int horizon,
                            double theta = 0.99);

struct BoundRow {
  long t = 0;
  double err_sq = 0.0;
  double bound = 0.0;  // bound on the squared error
  bool satisfied = true;
};

struct BoundReport {
  static constexpr double kTolerance = 1e-12;

  double lambda = 0.0;
  double alpha = 0.0;
  std::vector<BoundRow> rows;

  int violations() const;
  double max_err_sq() const;
  static bool satisfied(double err_sq, double bound) {
    return err_sq <= bound + kTolerance;
  }
};

struct Theorem3Params {
  double mu = 0.0;
  double nu = 0.0;
  double omega = 0.0;
  double lambda = 0.0;
  double epsilon = 0.0;  // 0 for exact optimisation
};

/// Squared-error bound
///   4 mu |x0 - xbar0|^2 lambda^t + 2 nu sum lambda^{t-1-i} |v_i|^2
///                               + 4 omega sum lambda^{t-1-i} |w_i|^2 + eps^2
/// for every estimate x_{t|t}, t = 0 .. estimates.size()-1.
BoundReport monitor_bound_theorem3(const std::vector<VectorXd>& estimates,
                                   const Trajectory& truth,
                                   const VectorXd& prior0,
                                   const Theorem3Params& params);

using RhoFunction = std::function<double(double, long)>;

struct Theorem1Rho {
  RhoFunction x, w, v;
};

/// rho_l(s,t) = 2 beta_l(2s,t) (+) alpha_l(s,t) with the scaled-linear
/// alpha candidates.
Theorem1Rho make_rho(const BetaSet& betas, const Theorem1Alphas& alphas);

/// Same construction with alpha_l defined by the window recursion
///   alpha_l(s,j) = beta_x(4 beta_l(2s, j-N), N) (+) beta_x(2 alpha_l(s, j-N), N)
/// for j >= N and 0 below N. Used where no closed form is available.
Theorem1Rho make_rho_recursive(const BetaSet& betas, int horizon);

/// Bound rho_x(|x0-xbar0|,t) (+) max_i rho_w(|w_i|,t-1-i) (+) max_i rho_v(|v_i|,t-1-i)
/// on |x_t - x_{t|t}|, reported squared.
BoundReport monitor_bound_theorem1(const std::vector<VectorXd>& estimates,
                                   const Trajectory& truth,
                                   const VectorXd& prior0,
                                   const Theorem1Rho& rho);

struct MinimumCheck {
  double cost_minimizer = 0.0;
  double cost_truth = 0.0;
  double distance = 0.0;
  double slack = 0.0;
  bool holds = true;
};

/// Compares the objective at the returned minimiser with its value at the
/// true window (x_{t-M}, w_{t-M..t-1}[, v_{t-M..t-1}]). Allowed slack is
/// eps_hat * distance + 1e-9.
MinimumCheck check_minimum_property(const MovingHorizonEstimator& est,
                                    const StepResult& step,
                                    const Trajectory& truth);

}  // namespace mhe

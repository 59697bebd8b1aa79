#include "mhe/mhe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "mhe/errors.hpp"
#include "mhe/random.hpp"

namespace mhe {

int EstimatorConfig::horizon() const {
  return std::visit([](const auto& spec) { return spec.horizon; }, cost);
}

void EstimatorConfig::validate(const SystemModel& model) const {
  MHE_REQUIRE(prior0.size() == model.n(),
              "EstimatorConfig: prior dimension does not match the model");
  MHE_REQUIRE(max_iters >= 1, "EstimatorConfig: max_iters must be >= 1");
  if (stop_mode == StopMode::kRelaxed) {
    MHE_REQUIRE(epsilon > 0.0, "EstimatorConfig: epsilon must be positive");
  }
  if (const auto* q = std::get_if<QuadraticCostSpec>(&cost)) {
    q->validate();
    if (stop_mode == StopMode::kRelaxed) {
      MHE_REQUIRE(4.0 * q->mu * std::pow(q->eta, q->horizon) < 1.0,
                  "EstimatorConfig: relaxed stopping requires 4 mu eta^N < 1");
      if (certificate) {
        const std::string failed = check_theorem3_conditions(
            *certificate, q->mu, q->nu, q->omega, q->eta, q->horizon);
        MHE_REQUIRE(failed.empty(), "EstimatorConfig: " + failed);
      }
    }
  } else {
    std::get<MaxFormCostSpec>(cost).validate();
    MHE_REQUIRE(starts >= 1, "EstimatorConfig: starts must be >= 1");
    MHE_REQUIRE(!tau_ladder.empty(), "EstimatorConfig: empty tau ladder");
    for (double tau : tau_ladder) {
      MHE_REQUIRE(tau > 0.0, "EstimatorConfig: tau values must be positive");
    }
    MHE_REQUIRE(stage_max_iters >= 1,
                "EstimatorConfig: stage_max_iters must be >= 1");
  }
}

MovingHorizonEstimator::MovingHorizonEstimator(SystemModel model,
                                               EstimatorConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.validate(model_);
}

DecisionLayout MovingHorizonEstimator::layout(int length) const {
  return DecisionLayout::for_model(model_, length, !config_.quadratic());
}

const VectorXd& MovingHorizonEstimator::prior_for(long t) const {
  const int N = config_.horizon();
  if (t <= N) return config_.prior0;
  const long k = t - N;
  MHE_REQUIRE(k >= first_estimate_ &&
                  k < first_estimate_ + static_cast<long>(estimates_.size()),
              "prior_for: estimate x_{t-N|t-N} is no longer stored");
  return estimates_[k - first_estimate_];
}

double MovingHorizonEstimator::objective(const WindowData& win,
                                         const VectorXd& z) const {
  if (const auto* q = std::get_if<QuadraticCostSpec>(&config_.cost)) {
    return eval_quadratic(model_, *q, win, z);
  }
  return eval_maxform(model_, std::get<MaxFormCostSpec>(config_.cost), win, z);
}

double MovingHorizonEstimator::threshold(long t) const {
  if (config_.stop_mode == StopMode::kExact) return StopRule::kExactThreshold;
  if (const auto* q = std::get_if<QuadraticCostSpec>(&config_.cost)) {
    return epsilon_schedule(config_.epsilon, q->eta, q->mu, q->horizon, t);
  }
  return config_.epsilon;
}

StepResult MovingHorizonEstimator::step(const VectorXd& y, const VectorXd& u) {
  MHE_REQUIRE(y.size() == model_.m(), "mhe step: output dimension mismatch");
  const VectorXd uu = u.size() == 0 ? VectorXd::Zero(model_.p()) : u;
  MHE_REQUIRE(uu.size() == model_.p(), "mhe step: input dimension mismatch");

  const int N = config_.horizon();
  ++t_;
  buffer_.emplace_back(y, uu);
  while (static_cast<int>(buffer_.size()) > N) buffer_.pop_front();

  StepResult res;
  res.t = t_;
  WindowData& win = res.window;
  win.length = static_cast<int>(std::min<long>(t_, N));
  win.time = t_;
  win.prior = prior_for(t_);
  for (const auto& [yy, ui] : buffer_) {
    win.outputs.push_back(yy);
    win.inputs.push_back(ui);
  }
  win.validate(model_);

  const DecisionLayout lay = layout(win.length);
  const VectorXd z0 = DecisionVector::warm_start(lay, win.prior).flatten();
  res.eps_hat = threshold(t_);

  if (config_.quadratic()) {
    const StopRule stop = config_.stop_mode == StopMode::kExact
                              ? StopRule::exact(config_.max_iters)
                              : StopRule::relaxed(res.eps_hat, config_.max_iters);
    auto [z, rep] = solve_quadratic(win, stop);
    res.z = std::move(z);
    res.report = std::move(rep);
    res.cost = res.report.cost;
  } else {
    const auto& spec = std::get<MaxFormCostSpec>(config_.cost);
    const auto& dom = model_.domains();
    std::vector<Box> parts{dom.state};
    for (int j = 0; j < win.length; ++j) parts.push_back(dom.process_noise);
    for (int j = 0; j < win.length; ++j) parts.push_back(dom.measurement_noise);
    const Box box = Box::stack(parts);

    const Objective truth = [&](const VectorXd& z) {
      return eval_maxform(model_, spec, win, z);
    };
    SmoothedFamily family;
    family.value = [&](const VectorXd& z, double tau) {
      return smoothed_log_maxform(model_, spec, win, z, tau);
    };
    family.gradient = [&](const VectorXd& z, double tau) {
      return grad_smoothed_log_maxform(model_, spec, win, z, tau).value;
    };
    MultistartOptions opts;
    opts.starts = config_.starts;
    opts.tau_ladder = config_.tau_ladder;
    opts.seed = CounterRng::mix(config_.seed ^ CounterRng::mix(t_));
    opts.stage_stop = config_.stop_mode == StopMode::kExact
                          ? StopRule::exact(config_.stage_max_iters)
                          : StopRule::relaxed(res.eps_hat, config_.stage_max_iters);
    opts.execution = config_.execution;
    MultistartResult ms = minimize_multistart(truth, family, z0, box, opts);
    res.z = std::move(ms.best);
    res.report = std::move(ms.report);
    res.cost = ms.best_value;
    res.best_start = ms.best_start;

    // Max-form terms are not Lipschitz at zero noise, so minimisers tend to
    // sit where noise blocks vanish; the all-zero face is searched as well.
    const Box noise_box = Box::stack({parts.begin() + 1, parts.end()});
    const VectorXd no_noise = VectorXd::Zero(noise_box.dim());
    if (noise_box.contains(no_noise)) {
      const auto embed = [&](const VectorXd& x) {
        VectorXd z(lay.size());
        z << x, no_noise;
        return z;
      };
      const Objective face_truth = [&](const VectorXd& x) { return truth(embed(x)); };
      SmoothedFamily face;
      face.value = [&](const VectorXd& x, double tau) {
        return family.value(embed(x), tau);
      };
      face.gradient = [&](const VectorXd& x, double tau) {
        return VectorXd(family.gradient(embed(x), tau).head(lay.n));
      };
      MultistartOptions face_opts = opts;
      face_opts.starts = 1;
      MultistartResult fr =
          minimize_multistart(face_truth, face, z0.head(lay.n), dom.state, face_opts);
      if (fr.best_value < res.cost) {
        res.z = embed(fr.best);
        res.cost = fr.best_value;
        res.report = std::move(fr.report);
        res.on_noise_face = true;
      }
    }
  }

  res.window_states =
      rollout(model_, win, DecisionVector::unflatten(lay, res.z));
  res.estimate = res.window_states.back();

  estimates_.push_back(res.estimate);
  // Keep x_{k|k} for k >= t+1-N, the priors of the coming windows.
  while (first_estimate_ < t_ + 1 - N && !estimates_.empty()) {
    estimates_.pop_front();
    ++first_estimate_;
  }
  return res;
}

std::pair<VectorXd, OptimReport> MovingHorizonEstimator::solve_quadratic(
    const WindowData& win, const StopRule& stop) const {
  const auto* q = std::get_if<QuadraticCostSpec>(&config_.cost);
  MHE_REQUIRE(q != nullptr, "solve_quadratic: estimator has a max-form cost");
  const DecisionLayout lay = layout(win.length);
  const VectorXd z0 = DecisionVector::warm_start(lay, win.prior).flatten();
  const Objective J = [&](const VectorXd& z) {
    return eval_quadratic(model_, *q, win, z);
  };
  const GradientFn G = [&](const VectorXd& z) {
    return grad_quadratic(model_, *q, win, z).value;
  };
  return descend(J, G, z0, Box::unbounded(lay.size()), stop);
}

LambdaChoice compute_lambda(double mu, double eta, int horizon, double theta) {
  MHE_REQUIRE(mu > 0.0, "compute_lambda: mu must be positive");
  MHE_REQUIRE(eta > 0.0 && eta < 1.0, "compute_lambda: eta must lie in (0,1)");
  MHE_REQUIRE(horizon >= 1, "compute_lambda: N must be >= 1");
  MHE_REQUIRE(theta > 0.0 && theta < 1.0, "compute_lambda: theta must lie in (0,1)");
  const double contraction = 4.0 * mu * std::pow(eta, horizon);
  MHE_REQUIRE(contraction < 1.0, "compute_lambda: requires 4 mu eta^N < 1");
  double alpha = std::log(theta / (4.0 * mu)) / (horizon * std::log(eta));
  alpha = std::clamp(alpha, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  const double check = 4.0 * mu * std::pow(eta, alpha * horizon);
  MHE_REQUIRE(check < 1.0,
              "compute_lambda: margin theta is below 4 mu eta^N");
  return {alpha, std::pow(eta, 1.0 - alpha)};
}

int BoundReport::violations() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                        [](const BoundRow& r) { return !r.satisfied; }));
}

double BoundReport::max_err_sq() const {
  double m = 0.0;
  for (const BoundRow& r : rows) m = std::max(m, r.err_sq);
  return m;
}

BoundReport monitor_bound_theorem3(const std::vector<VectorXd>& estimates,
                                   const Trajectory& truth,
                                   const VectorXd& prior0,
                                   const Theorem3Params& params) {
  MHE_REQUIRE(estimates.size() <= truth.states.size(),
              "monitor_bound_theorem3: more estimates than true states");
  BoundReport rep;
  rep.lambda = params.lambda;
  const double init = (truth.states.front() - prior0).squaredNorm();
  double sum_v = 0.0;
  double sum_w = 0.0;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    if (t > 0) {
      sum_v = params.lambda * sum_v + truth.measurement_noise[t - 1].squaredNorm();
      sum_w = params.lambda * sum_w + truth.process_noise[t - 1].squaredNorm();
    }
    BoundRow row;
    row.t = static_cast<long>(t);
    row.err_sq = (truth.states[t] - estimates[t]).squaredNorm();
    row.bound = 4.0 * params.mu * init * std::pow(params.lambda, t) +
                2.0 * params.nu * sum_v + 4.0 * params.omega * sum_w +
                params.epsilon * params.epsilon;
    row.satisfied = BoundReport::satisfied(row.err_sq, row.bound);
    rep.rows.push_back(row);
  }
  return rep;
}

Theorem1Rho make_rho(const BetaSet& betas, const Theorem1Alphas& alphas) {
  const KLFunction bv = betas.beta_v ? *betas.beta_v : betas.beta_y;
  const auto build = [](KLFunction beta, KLFunction alpha) -> RhoFunction {
    return [beta, alpha](double s, long t) {
      return std::max(2.0 * beta(2.0 * s, t), alpha(s, t));
    };
  };
  return {build(betas.beta_x, alphas.alpha_x), build(betas.beta_w, alphas.alpha_w),
          build(bv, alphas.alpha_v)};
}

Theorem1Rho make_rho_recursive(const BetaSet& betas, int horizon) {
  MHE_REQUIRE(horizon >= 1, "make_rho_recursive: N must be >= 1");
  const KLFunction bx = betas.beta_x;
  const KLFunction bv = betas.beta_v ? *betas.beta_v : betas.beta_y;
  const auto build = [bx, horizon](KLFunction beta) -> RhoFunction {
    return [bx, beta, horizon](double s, long t) {
      // alpha(s, t) by unrolling the recursion from the base block.
      const long r = t % horizon;
      double alpha = 0.0;
      for (long j = r + horizon; j <= t; j += horizon) {
        alpha = std::max(bx(4.0 * beta(2.0 * s, j - horizon), horizon),
                         bx(2.0 * alpha, horizon));
      }
      return std::max(2.0 * beta(2.0 * s, t), alpha);
    };
  };
  return {build(betas.beta_x), build(betas.beta_w), build(bv)};
}

BoundReport monitor_bound_theorem1(const std::vector<VectorXd>& estimates,
                                   const Trajectory& truth,
                                   const VectorXd& prior0,
                                   const Theorem1Rho& rho) {
  MHE_REQUIRE(estimates.size() <= truth.states.size(),
              "monitor_bound_theorem1: more estimates than true states");
  BoundReport rep;
  const double init = (truth.states.front() - prior0).norm();
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const long tt = static_cast<long>(t);
    double b = rho.x(init, tt);
    for (long i = 0; i < tt; ++i) {
      b = std::max(b, rho.w(truth.process_noise[i].norm(), tt - 1 - i));
      b = std::max(b, rho.v(truth.measurement_noise[i].norm(), tt - 1 - i));
    }
    BoundRow row;
    row.t = tt;
    row.err_sq = (truth.states[t] - estimates[t]).squaredNorm();
    row.bound = b * b;
    row.satisfied = BoundReport::satisfied(row.err_sq, row.bound);
    rep.rows.push_back(row);
  }
  return rep;
}

MinimumCheck check_minimum_property(const MovingHorizonEstimator& est,
                                    const StepResult& step,
                                    const Trajectory& truth) {
  const WindowData& win = step.window;
  const long first = win.time - win.length;
  MHE_REQUIRE(first >= 0 && win.time <= truth.horizon(),
              "check_minimum_property: window outside the trajectory");
  const DecisionLayout lay = est.layout(win.length);
  DecisionVector zt;
  zt.anchor = truth.states[first];
  for (int j = 0; j < win.length; ++j) {
    zt.w.push_back(truth.process_noise[first + j]);
    if (lay.with_v) zt.v.push_back(truth.measurement_noise[first + j]);
  }
  const VectorXd z_true = zt.flatten();

  MinimumCheck out;
  out.cost_minimizer = est.objective(win, step.z);
  out.cost_truth = est.objective(win, z_true);
  out.distance = (z_true - step.z).norm();
  out.slack = step.eps_hat * out.distance + 1e-9;
  out.holds = out.cost_minimizer <= out.cost_truth + out.slack;
  return out;
}

}  // namespace mhe

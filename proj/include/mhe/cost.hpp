#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mhe/kl.hpp"
#include "mhe/model.hpp"

namespace mhe {

/// Weights of the discounted least-squares window cost
///   mu |x0 - xbar|^2 eta^M + nu sum eta^{t-1-i} |y_i - h(x_i)|^2
///                          + omega sum eta^{t-1-i} |w_i|^2.
/// An upper bound of the true discount may be passed as `eta`.
struct QuadraticCostSpec {
  double mu = 1.0;
  double nu = 1.0;
  double omega = 1.0;
  double eta = 0.5;
  int horizon = 1;  // N

  void validate() const;
};

/// Max-form cost built from four KL functions.
struct MaxFormCostSpec {
  KLFunction beta_x;
  KLFunction beta_w;
  KLFunction beta_y;
  KLFunction beta_v;
  int horizon = 1;

  void validate() const;
};

/// Measurements and inputs of the window ending at time t (exclusive).
struct WindowData {
  int length = 0;   // M = min(t, N)
  long time = 0;    // t
  VectorXd prior;   // xbar_{t-M}
  std::vector<VectorXd> outputs;  // y_{t-M} .. y_{t-1}
  std::vector<VectorXd> inputs;   // u_{t-M} .. u_{t-1}

  void validate(const SystemModel& model) const;
};

/// Sizes of the blocks of a flattened decision vector:
/// [ anchor (n) | w_0 .. w_{M-1} (nw each) | v_0 .. v_{M-1} (nv each) ].
struct DecisionLayout {
  int n = 0;
  int nw = 0;
  int nv = 0;
  int length = 0;
  bool with_v = false;

  static DecisionLayout for_model(const SystemModel& model, int length,
                                  bool with_v);
  int size() const { return n + nw * length + (with_v ? nv * length : 0); }
  int w_offset(int j) const { return n + nw * j; }
  int v_offset(int j) const { return n + nw * length + nv * j; }
};

struct DecisionVector {
  VectorXd anchor;
  std::vector<VectorXd> w;
  std::vector<VectorXd> v;  // empty for the quadratic cost

  VectorXd flatten() const;
  static DecisionVector unflatten(const DecisionLayout& layout,
                                  const VectorXd& z);
  /// The warm start used by the descent algorithms: (xbar, 0[, 0]).
  static DecisionVector warm_start(const DecisionLayout& layout,
                                   const VectorXd& prior);
};

/// Anchor and noise estimates rolled forward: x_{t-M} .. x_t.
std::vector<VectorXd> rollout(const SystemModel& model, const WindowData& win,
                              const DecisionVector& z);

double eval_quadratic(const SystemModel& model, const QuadraticCostSpec& spec,
                      const WindowData& win, const VectorXd& z);
/// Gradient of eval_quadratic; at kinks of the model maps, the minimum-norm
/// generalized gradient (see generalized_gradient).
Gradient grad_quadratic(const SystemModel& model, const QuadraticCostSpec& spec,
                        const WindowData& win, const VectorXd& z);

double eval_maxform(const SystemModel& model, const MaxFormCostSpec& spec,
                    const WindowData& win, const VectorXd& z);

/// tau * log sum exp(term_j / tau) over the max-form terms.
double smoothed_maxform(const SystemModel& model, const MaxFormCostSpec& spec,
                        const WindowData& win, const VectorXd& z, double tau);

/// tau * log sum exp(log(term_j) / tau): the same smoothing applied to the
/// logarithms of the terms. Minimising it minimises log of the max-form cost,
/// which stays well scaled when the log-family terms reach e^300.
double smoothed_log_maxform(const SystemModel& model,
                            const MaxFormCostSpec& spec, const WindowData& win,
                            const VectorXd& z, double tau);
Gradient grad_smoothed_log_maxform(const SystemModel& model,
                                   const MaxFormCostSpec& spec,
                                   const WindowData& win, const VectorXd& z,
                                   double tau);

/// Individual max-form terms (linear scale), in a fixed order:
/// beta_x, then per step (beta_w, beta_y, beta_v).
std::vector<double> maxform_terms(const SystemModel& model,
                                  const MaxFormCostSpec& spec,
                                  const WindowData& win, const VectorXd& z);

// --- generic kernels ------------------------------------------------------

namespace detail {

inline constexpr double kLogFloor = -700.0;

template <typename T>
SVec<T> block(const Vec<T>& z, int offset, int size) {
  return z.segment(offset, size);
}

template <typename T>
T floor_log(const T& x) {
  return value_of(x) < kLogFloor ? T(kLogFloor) : x;
}

template <typename T>
T log_sum_exp(const std::vector<T>& terms, double tau) {
  using std::exp;
  using std::log;
  T top = terms.front();
  for (const T& t : terms) {
    if (value_of(t) > value_of(top)) top = t;
  }
  T acc(0.0);
  for (const T& t : terms) acc += exp((t - top) / tau);
  return top + tau * log(acc);
}

}  // namespace detail

template <typename T>
T quadratic_cost(const SystemModel& model, const QuadraticCostSpec& spec,
                 const WindowData& win, const Vec<T>& z) {
  const DecisionLayout layout =
      DecisionLayout::for_model(model, win.length, false);
  MHE_REQUIRE(z.size() == layout.size(), "quadratic cost: decision size");
  const int M = win.length;
  SVec<T> x = detail::block(z, 0, layout.n);
  const SVec<T> dx = x - lift<T>(win.prior);
  // Horner form of mu |dx|^2 eta^M + sum_j eta^{M-1-j} (nu |r_j|^2 + omega |w_j|^2)
  T cost = spec.mu * squared_norm(dx);
  const SVec<T> zero_v = SVec<T>::Constant(model.nv(), T(0.0));
  for (int j = 0; j < M; ++j) {
    const SVec<T> w = detail::block(z, layout.w_offset(j), layout.nw);
    const SVec<T> r = lift<T>(win.outputs[j]) - model.h<T>(x, zero_v);
    cost = cost * spec.eta + spec.nu * squared_norm(r) + spec.omega * squared_norm(w);
    x = model.f<T>(x, lift<T>(win.inputs[j]), w);
  }
  return cost;
}

/// Logarithms of the max-form terms (-infinity for a zero term).
template <typename T>
std::vector<T> maxform_log_terms(const SystemModel& model,
                                 const MaxFormCostSpec& spec,
                                 const WindowData& win, const Vec<T>& z) {
  const DecisionLayout layout =
      DecisionLayout::for_model(model, win.length, true);
  MHE_REQUIRE(z.size() == layout.size(), "max-form cost: decision size");
  const int M = win.length;
  std::vector<T> terms;
  terms.reserve(1 + 3 * M);
  SVec<T> x = detail::block(z, 0, layout.n);
  terms.push_back(
      spec.beta_x.log_value(T(2.0) * norm(x - lift<T>(win.prior)), M));
  for (int j = 0; j < M; ++j) {
    const double age = M - 1 - j;
    const SVec<T> w = detail::block(z, layout.w_offset(j), layout.nw);
    const SVec<T> v = detail::block(z, layout.v_offset(j), layout.nv);
    const SVec<T> r = lift<T>(win.outputs[j]) - model.h<T>(x, v);
    terms.push_back(spec.beta_w.log_value(T(2.0) * norm(w), age));
    terms.push_back(spec.beta_y.log_value(norm(r), age));
    terms.push_back(spec.beta_v.log_value(T(2.0) * norm(v), age));
    x = model.f<T>(x, lift<T>(win.inputs[j]), w);
  }
  return terms;
}

}  // namespace mhe

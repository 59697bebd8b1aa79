#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "mhe/dual.hpp"
#include "mhe/errors.hpp"

namespace mhe {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
using Eigen::VectorXd;

/// Upper bound on every signal dimension (state, input, output, noises).
inline constexpr int kMaxSignalDim = 16;
/// Signal vector with inline storage; never touches the heap.
template <typename T>
using SVec = Eigen::Matrix<T, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxSignalDim, 1>;

/// Axis-aligned box {x : lower <= x <= upper}; entries may be infinite.
struct Box {
  VectorXd lower;
  VectorXd upper;

  Box() = default;
  Box(VectorXd lo, VectorXd hi);

  static Box unbounded(int dim);
  static Box uniform(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower.size()); }
  bool is_bounded() const;
  bool contains(const VectorXd& x) const;
  VectorXd clamp(const VectorXd& x) const;
  void clamp_in_place(VectorXd& x) const;
  /// Concatenation of boxes, in order.
  static Box stack(const std::vector<Box>& parts);
};

struct ModelDimensions {
  int n = 0;   // state
  int m = 0;   // output
  int p = 0;   // known input (0 allowed)
  int nw = 0;  // process noise
  int nv = 0;  // measurement noise
};

/// Plant x_{t+1} = f(x, u, w), y = h(x, v) with domain boxes.
///
/// The maps are stored twice: once on doubles and once on dual numbers, so
/// any scalar composition of them can be differentiated exactly. Both are
/// instantiated from a single generic callable in `create`.
class SystemModel {
 public:
  template <typename T>
  using DynamicsFn =
      std::function<SVec<T>(const SVec<T>&, const SVec<T>&, const SVec<T>&)>;
  template <typename T>
  using OutputFn = std::function<SVec<T>(const SVec<T>&, const SVec<T>&)>;

  struct Domains {
    Box state;
    Box process_noise;
    Box measurement_noise;
    Box input;
  };

  template <typename F, typename H>
  static SystemModel create(std::string name, ModelDimensions dims, F&& f,
                            H&& h, Domains domains);

  const std::string& name() const { return name_; }
  const ModelDimensions& dims() const { return dims_; }
  int n() const { return dims_.n; }
  int m() const { return dims_.m; }
  int p() const { return dims_.p; }
  int nw() const { return dims_.nw; }
  int nv() const { return dims_.nv; }
  const Domains& domains() const { return domains_; }

  template <typename T>
  SVec<T> f(const SVec<T>& x, const SVec<T>& u, const SVec<T>& w) const;
  template <typename T>
  SVec<T> h(const SVec<T>& x, const SVec<T>& v) const;

 private:
  SystemModel() = default;

  std::string name_;
  ModelDimensions dims_;
  Domains domains_;
  DynamicsFn<double> f_;
  DynamicsFn<Dual> f_dual_;
  OutputFn<double> h_;
  OutputFn<Dual> h_dual_;
};

/// A rolled-out realisation of the plant.
struct Trajectory {
  std::vector<VectorXd> states;   // x_0 .. x_T
  std::vector<VectorXd> outputs;  // y_0 .. y_{T-1}
  std::vector<VectorXd> inputs;   // u_0 .. u_{T-1}
  std::vector<VectorXd> process_noise;      // w_0 .. w_{T-1}
  std::vector<VectorXd> measurement_noise;  // v_0 .. v_{T-1}

  int horizon() const { return static_cast<int>(outputs.size()); }
};

struct NoiseSequences {
  std::vector<VectorXd> process;      // w_t
  std::vector<VectorXd> measurement;  // v_t
};

/// f(x, u, w) with dimension checks.
VectorXd step(const SystemModel& model, const VectorXd& x, const VectorXd& u,
              const VectorXd& w);

/// Rolls the plant forward for `steps` steps. `inputs` may be empty when the
/// model has no inputs.
Trajectory simulate(const SystemModel& model, const VectorXd& x0,
                    const std::vector<VectorXd>& inputs,
                    const NoiseSequences& noise, int steps);

struct Gradient {
  VectorXd value;
  bool kink = false;  // a non-differentiable primitive was hit
};

/// Exact gradient of `fn` at `z` by forward-mode evaluation, one directional
/// pass per coordinate. `fn` must accept `const Vec<Dual>&` and return Dual.
template <typename Fn>
Gradient differentiate(Fn&& fn, const VectorXd& z) {
  Gradient g;
  g.value.resize(z.size());
  Vec<Dual> zd(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) zd[i] = Dual(z[i]);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    zd[i].d = 1.0;
    const Dual r = fn(zd);
    zd[i].d = 0.0;
    g.value[i] = r.d;
    g.kink = g.kink || r.kink;
  }
  return g;
}

/// Minimum-norm element of the generalized gradient of `fn` at `z`.
///
/// Away from kinks of `abs` this is the ordinary gradient. When some |a| is
/// within `kink_tolerance` of zero, the one-sided derivatives of every such
/// kink span the set {g0 + sum_k t_k v_k : t in [-1,1]^K} and the element of
/// least norm is returned (kink flagged). It is a descent direction wherever
/// one exists and its norm is the stationarity measure of the nonsmooth cost.
template <typename Fn>
Gradient generalized_gradient(Fn&& fn, const VectorXd& z,
                              double kink_tolerance = 1e-9);

/// Euclidean norm safe at the origin (zero subgradient, kink flagged).
template <typename Derived>
typename Derived::Scalar norm(const Eigen::MatrixBase<Derived>& x) {
  using std::sqrt;
  using T = typename Derived::Scalar;
  T s(0.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i] * x[i];
  return sqrt(s);
}

template <typename Derived>
typename Derived::Scalar squared_norm(const Eigen::MatrixBase<Derived>& x) {
  using T = typename Derived::Scalar;
  T s(0.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i] * x[i];
  return s;
}

template <typename T>
SVec<T> lift(const VectorXd& x) {
  SVec<T> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = T(x[i]);
  return out;
}

// --- template definitions -------------------------------------------------

template <typename F, typename H>
SystemModel SystemModel::create(std::string name, ModelDimensions dims, F&& f,
                                H&& h, Domains domains) {
  MHE_REQUIRE(dims.n > 0 && dims.m > 0 && dims.p >= 0 && dims.nw >= 0 &&
                  dims.nv >= 0,
              "SystemModel: invalid dimensions");
  MHE_REQUIRE(std::max({dims.n, dims.m, dims.p, dims.nw, dims.nv}) <=
                  kMaxSignalDim,
              "SystemModel: signal dimension exceeds kMaxSignalDim");
  MHE_REQUIRE(domains.state.dim() == dims.n &&
                  domains.process_noise.dim() == dims.nw &&
                  domains.measurement_noise.dim() == dims.nv &&
                  domains.input.dim() == dims.p,
              "SystemModel: domain box dimensions do not match the model");
  SystemModel model;
  model.name_ = std::move(name);
  model.dims_ = dims;
  model.domains_ = std::move(domains);
  model.f_ = [f](const SVec<double>& x, const SVec<double>& u,
                 const SVec<double>& w) { return SVec<double>(f(x, u, w)); };
  model.f_dual_ = [f](const SVec<Dual>& x, const SVec<Dual>& u,
                      const SVec<Dual>& w) { return SVec<Dual>(f(x, u, w)); };
  model.h_ = [h](const SVec<double>& x, const SVec<double>& v) {
    return SVec<double>(h(x, v));
  };
  model.h_dual_ = [h](const SVec<Dual>& x, const SVec<Dual>& v) {
    return SVec<Dual>(h(x, v));
  };
  return model;
}

template <typename T>
SVec<T> SystemModel::f(const SVec<T>& x, const SVec<T>& u,
                       const SVec<T>& w) const {
  if constexpr (std::is_same_v<T, Dual>) {
    return f_dual_(x, u, w);
  } else {
    return f_(x, u, w);
  }
}

template <typename T>
SVec<T> SystemModel::h(const SVec<T>& x, const SVec<T>& v) const {
  if constexpr (std::is_same_v<T, Dual>) {
    return h_dual_(x, v);
  } else {
    return h_(x, v);
  }
}

namespace detail {

struct KinkPolicyScope {
  KinkPolicy policy;
  KinkPolicy* previous;
  explicit KinkPolicyScope(KinkPolicy p)
      : policy(std::move(p)), previous(active_kink_policy()) {
    active_kink_policy() = &policy;
  }
  ~KinkPolicyScope() { active_kink_policy() = previous; }
  KinkPolicyScope(const KinkPolicyScope&) = delete;
  KinkPolicyScope& operator=(const KinkPolicyScope&) = delete;
};

// Gradient under a fixed choice of kink derivatives; reports the kink count.
template <typename Fn>
VectorXd gradient_with_signs(Fn& fn, const VectorXd& z, double tol,
                             std::vector<double> signs, std::size_t& kinks) {
  KinkPolicyScope scope(KinkPolicy{tol, std::move(signs), 0});
  VectorXd g(z.size());
  Vec<Dual> zd(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) zd[i] = Dual(z[i]);
  kinks = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    scope.policy.met = 0;
    zd[i].d = 1.0;
    g[i] = fn(zd).d;
    zd[i].d = 0.0;
    kinks = std::max(kinks, scope.policy.met);
  }
  return g;
}

}  // namespace detail

template <typename Fn>
Gradient generalized_gradient(Fn&& fn, const VectorXd& z,
                              double kink_tolerance) {
  std::size_t K = 0;
  const VectorXd g0 = detail::gradient_with_signs(fn, z, kink_tolerance, {}, K);
  if (K == 0) return {g0, false};
  constexpr std::size_t kMaxKinks = 8;
  if (K > kMaxKinks) return {g0, true};

  Eigen::MatrixXd V(z.size(), static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> signs(K, 0.0);
    signs[k] = 1.0;
    std::size_t met = 0;
    V.col(static_cast<Eigen::Index>(k)) =
        detail::gradient_with_signs(fn, z, kink_tolerance, signs, met) - g0;
  }

  // min |g0 + V t| over the box [-1,1]^K: every coordinate is either at a
  // bound or free, and the free block solves a least-squares problem.
  VectorXd best = g0;
  double best_norm = std::numeric_limits<double>::infinity();
  std::size_t patterns = 1;
  for (std::size_t k = 0; k < K; ++k) patterns *= 3;
  for (std::size_t code = 0; code < patterns; ++code) {
    std::vector<int> state(K);
    std::size_t c = code;
    std::vector<Eigen::Index> free_idx;
    VectorXd t = VectorXd::Zero(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
      state[k] = static_cast<int>(c % 3) - 1;  // -1, 0 (free), +1
      c /= 3;
      if (state[k] == 0) {
        free_idx.push_back(static_cast<Eigen::Index>(k));
      } else {
        t[static_cast<Eigen::Index>(k)] = state[k];
      }
    }
    VectorXd rhs = g0 + V * t;
    if (!free_idx.empty()) {
      Eigen::MatrixXd A(z.size(), static_cast<Eigen::Index>(free_idx.size()));
      for (std::size_t j = 0; j < free_idx.size(); ++j) {
        A.col(static_cast<Eigen::Index>(j)) = V.col(free_idx[j]);
      }
      const VectorXd tf = A.completeOrthogonalDecomposition().solve(-rhs);
      bool inside = true;
      for (Eigen::Index j = 0; j < tf.size(); ++j) inside = inside && std::abs(tf[j]) <= 1.0;
      if (!inside) continue;
      for (std::size_t j = 0; j < free_idx.size(); ++j) t[free_idx[j]] = tf[j];
      rhs = g0 + V * t;
    }
    const double nrm = rhs.norm();
    if (nrm < best_norm) {
      best_norm = nrm;
      best = rhs;
    }
  }
  return {best, true};
}

}  // namespace mhe

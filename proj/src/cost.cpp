#include "mhe/cost.hpp"

namespace mhe {

void QuadraticCostSpec::validate() const {
  MHE_REQUIRE(mu > 0.0 && nu > 0.0 && omega > 0.0,
              "QuadraticCostSpec: weights mu, nu, omega must be positive");
  MHE_REQUIRE(eta > 0.0 && eta < 1.0, "QuadraticCostSpec: eta must lie in (0,1)");
  MHE_REQUIRE(horizon >= 1, "QuadraticCostSpec: N must be >= 1");
}

void MaxFormCostSpec::validate() const {
  MHE_REQUIRE(horizon >= 1, "MaxFormCostSpec: N must be >= 1");
}

void WindowData::validate(const SystemModel& model) const {
  MHE_REQUIRE(length >= 0, "WindowData: negative length");
  MHE_REQUIRE(static_cast<int>(outputs.size()) == length &&
                  static_cast<int>(inputs.size()) == length,
              "WindowData: sequence lengths differ from the window length");
  MHE_REQUIRE(prior.size() == model.n(), "WindowData: prior dimension");
  for (const VectorXd& y : outputs) {
    MHE_REQUIRE(y.size() == model.m(), "WindowData: output dimension");
  }
  for (const VectorXd& u : inputs) {
    MHE_REQUIRE(u.size() == model.p(), "WindowData: input dimension");
  }
}

DecisionLayout DecisionLayout::for_model(const SystemModel& model, int length,
                                         bool with_v) {
  return DecisionLayout{model.n(), model.nw(), model.nv(), length, with_v};
}

VectorXd DecisionVector::flatten() const {
  const Eigen::Index nw = w.empty() ? 0 : w.front().size();
  const Eigen::Index nv = v.empty() ? 0 : v.front().size();
  VectorXd z(anchor.size() + nw * static_cast<Eigen::Index>(w.size()) +
             nv * static_cast<Eigen::Index>(v.size()));
  Eigen::Index at = 0;
  z.segment(at, anchor.size()) = anchor;
  at += anchor.size();
  for (const VectorXd& wi : w) {
    z.segment(at, wi.size()) = wi;
    at += wi.size();
  }
  for (const VectorXd& vi : v) {
    z.segment(at, vi.size()) = vi;
    at += vi.size();
  }
  return z;
}

DecisionVector DecisionVector::unflatten(const DecisionLayout& layout,
                                         const VectorXd& z) {
  MHE_REQUIRE(z.size() == layout.size(), "DecisionVector: size mismatch");
  DecisionVector d;
  d.anchor = z.head(layout.n);
  for (int j = 0; j < layout.length; ++j) {
    d.w.push_back(z.segment(layout.w_offset(j), layout.nw));
  }
  if (layout.with_v) {
    for (int j = 0; j < layout.length; ++j) {
      d.v.push_back(z.segment(layout.v_offset(j), layout.nv));
    }
  }
  return d;
}

DecisionVector DecisionVector::warm_start(const DecisionLayout& layout,
                                          const VectorXd& prior) {
  VectorXd z = VectorXd::Zero(layout.size());
  z.head(layout.n) = prior;
  return unflatten(layout, z);
}

std::vector<VectorXd> rollout(const SystemModel& model, const WindowData& win,
                              const DecisionVector& z) {
  MHE_REQUIRE(static_cast<int>(z.w.size()) == win.length,
              "rollout: noise block length differs from the window");
  std::vector<VectorXd> xs;
  xs.reserve(win.length + 1);
  xs.push_back(z.anchor);
  for (int j = 0; j < win.length; ++j) {
    xs.push_back(step(model, xs.back(), win.inputs[j], z.w[j]));
  }
  return xs;
}

double eval_quadratic(const SystemModel& model, const QuadraticCostSpec& spec,
                      const WindowData& win, const VectorXd& z) {
  return quadratic_cost<double>(model, spec, win, z);
}

Gradient grad_quadratic(const SystemModel& model, const QuadraticCostSpec& spec,
                        const WindowData& win, const VectorXd& z) {
  return generalized_gradient(
      [&](const Vec<Dual>& zd) {
        return quadratic_cost<Dual>(model, spec, win, zd);
      },
      z);
}

std::vector<double> maxform_terms(const SystemModel& model,
                                  const MaxFormCostSpec& spec,
                                  const WindowData& win, const VectorXd& z) {
  std::vector<double> terms = maxform_log_terms<double>(model, spec, win, z);
  for (double& t : terms) t = std::exp(t);
  return terms;
}

double eval_maxform(const SystemModel& model, const MaxFormCostSpec& spec,
                    const WindowData& win, const VectorXd& z) {
  const std::vector<double> terms = maxform_terms(model, spec, win, z);
  return *std::max_element(terms.begin(), terms.end());
}

double smoothed_maxform(const SystemModel& model, const MaxFormCostSpec& spec,
                        const WindowData& win, const VectorXd& z, double tau) {
  MHE_REQUIRE(tau > 0.0, "smoothed_maxform: tau must be positive");
  return detail::log_sum_exp(maxform_terms(model, spec, win, z), tau);
}

namespace {

template <typename T>
T smoothed_log(const SystemModel& model, const MaxFormCostSpec& spec,
               const WindowData& win, const Vec<T>& z, double tau) {
  std::vector<T> terms = maxform_log_terms<T>(model, spec, win, z);
  for (T& t : terms) t = detail::floor_log(t);
  return detail::log_sum_exp(terms, tau);
}

}  // namespace

double smoothed_log_maxform(const SystemModel& model,
                            const MaxFormCostSpec& spec, const WindowData& win,
                            const VectorXd& z, double tau) {
  MHE_REQUIRE(tau > 0.0, "smoothed_log_maxform: tau must be positive");
  return smoothed_log<double>(model, spec, win, z, tau);
}

Gradient grad_smoothed_log_maxform(const SystemModel& model,
                                   const MaxFormCostSpec& spec,
                                   const WindowData& win, const VectorXd& z,
                                   double tau) {
  MHE_REQUIRE(tau > 0.0, "grad_smoothed_log_maxform: tau must be positive");
  return generalized_gradient(
      [&](const Vec<Dual>& zd) {
        return smoothed_log<Dual>(model, spec, win, zd, tau);
      },
      z);
}

}  // namespace mhe

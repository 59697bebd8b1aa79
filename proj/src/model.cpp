#include "mhe/model.hpp"

#include <algorithm>
#include <cmath>

namespace mhe {

Box::Box(VectorXd lo, VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  MHE_REQUIRE(lower.size() == upper.size(), "Box: bound sizes differ");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    MHE_REQUIRE(!(lower[i] > upper[i]), "Box: lower bound exceeds upper bound");
  }
}

Box Box::unbounded(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return Box(VectorXd::Constant(dim, -inf), VectorXd::Constant(dim, inf));
}

Box Box::uniform(int dim, double lo, double hi) {
  return Box(VectorXd::Constant(dim, lo), VectorXd::Constant(dim, hi));
}

bool Box::is_bounded() const {
  return lower.allFinite() && upper.allFinite();
}

bool Box::contains(const VectorXd& x) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

VectorXd Box::clamp(const VectorXd& x) const {
  MHE_REQUIRE(x.size() == lower.size(), "Box::clamp: dimension mismatch");
  VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out[i] = std::min(std::max(x[i], lower[i]), upper[i]);
  }
  return out;
}

void Box::clamp_in_place(VectorXd& x) const {
  MHE_REQUIRE(x.size() == lower.size(), "Box::clamp: dimension mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
  }
}

Box Box::stack(const std::vector<Box>& parts) {
  Eigen::Index total = 0;
  for (const Box& b : parts) total += b.dim();
  VectorXd lo(total), hi(total);
  Eigen::Index at = 0;
  for (const Box& b : parts) {
    lo.segment(at, b.dim()) = b.lower;
    hi.segment(at, b.dim()) = b.upper;
    at += b.dim();
  }
  return Box(std::move(lo), std::move(hi));
}

VectorXd step(const SystemModel& model, const VectorXd& x, const VectorXd& u,
              const VectorXd& w) {
  MHE_REQUIRE(x.size() == model.n(), "step: state dimension mismatch");
  MHE_REQUIRE(u.size() == model.p(), "step: input dimension mismatch");
  MHE_REQUIRE(w.size() == model.nw(), "step: noise dimension mismatch");
  return model.f<double>(x, u, w);
}

Trajectory simulate(const SystemModel& model, const VectorXd& x0,
                    const std::vector<VectorXd>& inputs,
                    const NoiseSequences& noise, int steps) {
  MHE_REQUIRE(steps >= 0, "simulate: negative horizon");
  MHE_REQUIRE(x0.size() == model.n(), "simulate: x0 dimension mismatch");
  MHE_REQUIRE(static_cast<int>(noise.process.size()) >= steps &&
                  static_cast<int>(noise.measurement.size()) >= steps,
              "simulate: noise sequences shorter than the horizon");
  MHE_REQUIRE(model.p() == 0 || static_cast<int>(inputs.size()) >= steps,
              "simulate: input sequence shorter than the horizon");

  Trajectory traj;
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  const VectorXd no_input(0);
  for (int t = 0; t < steps; ++t) {
    const VectorXd& u = model.p() == 0 ? no_input : inputs[t];
    const VectorXd& w = noise.process[t];
    const VectorXd& v = noise.measurement[t];
    MHE_REQUIRE(v.size() == model.nv(), "simulate: measurement noise dimension");
    const VectorXd& x = traj.states.back();
    traj.outputs.push_back(model.h<double>(x, v));
    traj.inputs.push_back(u);
    traj.process_noise.push_back(w);
    traj.measurement_noise.push_back(v);
    traj.states.push_back(step(model, x, u, w));
  }
  return traj;
}

}  // namespace mhe

// Serial against OpenMP versions of the sampling kernels.
#include <benchmark/benchmark.h>

#include "mhe/certify.hpp"
#include "mhe/cost.hpp"
#include "mhe/examples.hpp"
#include "mhe/optimize.hpp"

using namespace mhe;

namespace {

Execution exec_of(const benchmark::State& st) {
  return st.range(0) ? Execution::kParallel : Execution::kSerial;
}

void label(benchmark::State& st) { st.SetLabel(st.range(0) ? "parallel" : "serial"); }

void BM_Dissipation(benchmark::State& st) {
  const SystemModel m = build_example1();
  const auto spec = example1_lyapunov_spec();
  const auto dom = example1_dissipation_domains();
  for (auto _ : st) {
    benchmark::DoNotOptimize(check_dissipation(m, spec, dom, 20000, 1, exec_of(st)));
  }
  st.SetItemsProcessed(st.iterations() * 20000);
  label(st);
}

void BM_CertificateSup(benchmark::State& st) {
  const SystemModel m = build_example2();
  const auto c = example2_constants();
  const auto dom = example2_certificate_domains();
  for (auto _ : st) {
    benchmark::DoNotOptimize(sampled_certificate_sup(m, c, dom, 20000, 1, exec_of(st)));
  }
  st.SetItemsProcessed(st.iterations() * 20000);
  label(st);
}

void BM_ConvexityFalsifier(benchmark::State& st) {
  const SystemModel m = build_example1();
  const QuadraticCostSpec spec = example1_quadratic_spec(3);
  WindowData w;
  w.length = 3;
  w.time = 3;
  w.prior = Eigen::Vector3d(-2, -2, -2);
  for (double y : {2.1, 1.3, 0.8}) w.outputs.push_back(VectorXd::Constant(1, y));
  for (double u : {0.0, 0.2, 0.39}) w.inputs.push_back(VectorXd::Constant(1, u));
  const Objective J = [&](const VectorXd& z) { return eval_quadratic(m, spec, w, z); };
  const Box box = Box::stack({Box::uniform(3, -3, 3), Box::uniform(9, -1, 1)});
  for (auto _ : st) {
    benchmark::DoNotOptimize(convexity_falsifier(J, box, 20000, 7, exec_of(st)));
  }
  st.SetItemsProcessed(st.iterations() * 20000);
  label(st);
}

void BM_Multistart(benchmark::State& st) {
  const SystemModel m = build_example2();
  const MaxFormCostSpec spec = example2_maxform_spec(3);
  WindowData w;
  w.length = 3;
  w.time = 3;
  w.prior = Eigen::Vector2d(-1, -1);
  for (double y : {2.0, 1.1, 0.9}) w.outputs.push_back(VectorXd::Constant(1, y));
  for (int j = 0; j < 3; ++j) w.inputs.push_back(VectorXd::Zero(0));
  const Objective truth = [&](const VectorXd& z) { return eval_maxform(m, spec, w, z); };
  SmoothedFamily fam;
  fam.value = [&](const VectorXd& z, double t) { return smoothed_log_maxform(m, spec, w, z, t); };
  fam.gradient = [&](const VectorXd& z, double t) {
    return grad_smoothed_log_maxform(m, spec, w, z, t).value;
  };
  const Box box = Box::stack({Box::uniform(2, -2, 2), Box::uniform(3, -0.01, 0.01),
                              Box::uniform(3, -0.5, 0.5)});
  MultistartOptions o;
  o.seed = 99;
  o.stage_stop = StopRule::relaxed(0.01, 40);
  o.execution = exec_of(st);
  VectorXd z0 = VectorXd::Zero(8);
  z0.head(2) = w.prior;
  for (auto _ : st) benchmark::DoNotOptimize(minimize_multistart(truth, fam, z0, box, o));
  label(st);
}

}  // namespace

BENCHMARK(BM_Dissipation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CertificateSup)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvexityFalsifier)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Multistart)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

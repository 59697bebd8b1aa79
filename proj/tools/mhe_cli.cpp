#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhe/certify.hpp"
#include "mhe/examples.hpp"
#include "mhe/io.hpp"
#include "mhe/parallel.hpp"

namespace fs = std::filesystem;
using namespace mhe;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool svg = false;
  int runs = 1;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::vector<ScenarioRun> run_many(const Scenario& s, int runs, bool shadow_exact) {
  std::vector<ScenarioRun> out(runs);
  for_each_index(runs, Execution::kParallel, [&](std::int64_t r) {
    out[r] = run_scenario(s, static_cast<std::uint64_t>(r), shadow_exact);
  });
  return out;
}

// Writes CSV, summary JSON and optional SVGs for every run; returns false
// when a guaranteed bound is violated.
bool emit_runs(const Scenario& s, const std::vector<ScenarioRun>& runs,
               const Common& c) {
  fs::create_directories(c.out);
  bool ok = true;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const ScenarioRun& run = runs[r];
    const std::string stem = s.name + "_run" + std::to_string(r);
    std::ostringstream csv;
    write_run_csv(csv, run);
    write_file(fs::path(c.out) / (stem + ".csv"), csv.str());
    const Json summary = run_summary(s, run, r);
    write_file(fs::path(c.out) / (stem + ".json"), summary.dump(2) + "\n");
    if (c.svg) {
      write_file(fs::path(c.out) / (stem + "_states.svg"), svg_states(run));
      write_file(fs::path(c.out) / (stem + "_error.svg"), svg_error_bound(run));
    }
    const int v = run.bound.violations();
    std::cout << stem << ": violations=" << v
              << " max_error=" << format_double(summary["max_error"].get<double>())
              << " final_error=" << format_double(summary["final_error"].get<double>())
              << " minimum_property_violations=" << run.minimum_violations()
              << " iterations=" << run.total_iterations() << "\n";
    if (v > 0) {
      if (run.guaranteed_bound) {
        ok = false;
        std::cerr << "error: " << stem << ": " << v << " bound violations\n";
      } else {
        std::cerr << "warning: " << stem << ": " << v
                  << " diagnostic bound violations (approximate minimax solve)\n";
      }
    }
  }
  return ok;
}

Scenario load(const Common& c) {
  Scenario s = load_scenario(c.config);
  if (c.seed) s.seed = *c.seed;
  return s;
}

int cmd_estimate(const Common& c) {
  const Scenario s = load(c);
  const auto runs = run_many(s, c.runs, false);
  return emit_runs(s, runs, c) ? 0 : 1;
}

Json dissipation_json(const DissipationResult& d) {
  Json j;
  j["samples"] = d.samples;
  j["max_residual"] = d.max_residual;
  j["passes"] = d.passes();
  if (!d.passes()) {
    Json w;
    auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    w["x"] = vec(d.x);
    w["z"] = vec(d.z);
    w["wx"] = vec(d.wx);
    w["wz"] = vec(d.wz);
    w["u"] = vec(d.u);
    j["witness"] = w;
  }
  return j;
}

Json betas_json(const BetaSet& b) {
  Json j;
  j["beta_x"] = kl_to_json(b.beta_x);
  j["beta_w"] = kl_to_json(b.beta_w);
  j["beta_y"] = kl_to_json(b.beta_y);
  if (b.beta_v) j["beta_v"] = kl_to_json(*b.beta_v);
  return j;
}

int certify_example1(const SystemModel& model, std::uint64_t seed, Json& report) {
  const DissipationResult d = check_dissipation(model, example1_lyapunov_spec(),
                                                example1_dissipation_domains(),
                                                100000, seed);
  report["dissipation"] = dissipation_json(d);

  const ExponentialCertificate cert = example1_certificate();
  const RationalCostParameters p = select_parameters_theorem3(
      Rational(1), Rational(140, 3), Rational(146, 3), Rational(7, 16));
  Json t3;
  t3["c_x"] = cert.c_x;
  t3["c_v"] = cert.c_v;
  t3["c_w"] = cert.c_w;
  t3["eta"] = cert.eta;
  t3["mu"] = p.mu.str();
  t3["nu"] = p.nu.str();
  t3["omega"] = p.omega.str();
  t3["N_min"] = p.n_min;
  report["theorem3"] = t3;

  const BetaSet betas = derive_betas(example1_lyapunov_spec(), false);
  int n_min = -1;
  std::optional<Theorem1Violation> witness;
  for (int N = 1; N <= 64; ++N) {
    const Theorem1Check chk =
        check_theorem1_conditions(betas, theorem1_alpha_candidates(betas, N), N);
    if (chk.pass()) {
      n_min = N;
      break;
    }
    witness = chk.witness;
  }
  Json t1;
  t1["betas"] = betas_json(betas);
  t1["eta"] = betas.beta_x.eta_b();
  t1["N_min"] = n_min;
  if (witness) {
    t1["witness_below_N_min"] = {{"inequality", witness->inequality},
                                 {"s", witness->s},
                                 {"k", witness->k},
                                 {"lhs", witness->lhs},
                                 {"rhs", witness->rhs}};
  }
  report["theorem1"] = t1;

  const bool ok = d.passes() && n_min > 0;
  report["certified"] = ok;
  return ok ? 0 : 1;
}

int certify_example2(const SystemModel& model, std::uint64_t seed, Json& report) {
  const CertificateConstants c = example2_constants();
  const SupEstimate sup = sampled_certificate_sup(
      model, c, example2_certificate_domains(), 100000, seed);
  Json j;
  j["c1"] = c.c1;
  j["c_w"] = c.c_w;
  j["c_y"] = c.c_y;
  j["c_v"] = c.c_v;
  j["c0_reported"] = kExample2C0;
  j["sampled_sup"] = sup.value;
  j["samples"] = sup.samples;
  const bool ok = sup.value > 0.0 && sup.value < 1.0;
  if (!ok) {
    auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    j["witness"] = {{"x", vec(sup.argmax.x)},   {"z", vec(sup.argmax.z)},
                    {"wx", vec(sup.argmax.wx)}, {"wz", vec(sup.argmax.wz)},
                    {"vx", vec(sup.argmax.vx)}, {"vz", vec(sup.argmax.vz)}};
  }
  report["certificate"] = j;
  const Certificate cert = make_certificate(c, kExample2C0);
  report["sigma_rate"] = cert.sigma_rate();
  report["betas"] = betas_json(derive_betas(cert.lyapunov_spec(), true));
  report["certified"] = ok;
  return ok ? 0 : 1;
}

int cmd_certify(const std::string& name, const Common& c) {
  const SystemModel model = model_by_name(name);
  const std::uint64_t seed = c.seed.value_or(0);
  Json report;
  report["model"] = name;
  report["seed"] = seed;
  const int code = name == "example1" ? certify_example1(model, seed, report)
                                      : certify_example2(model, seed, report);
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (c.out != ".") {
    fs::create_directories(c.out);
    write_file(fs::path(c.out) / ("certify_" + name + ".json"), text);
  }
  if (code != 0) std::cerr << "error: certification of " << name << " failed\n";
  return code;
}

int cmd_bench(const Common& c) {
  Scenario s = load(c);
  if (!s.estimator.quadratic()) {
    throw ContractViolation("bench: needs a quadratic-cost scenario");
  }
  s.estimator.stop_mode = StopMode::kRelaxed;
  const auto runs = run_many(s, c.runs, true);

  std::ostringstream table;
  table << "run,t,eps_hat,iters_relaxed,iters_exact,cost_evals_relaxed,cost_evals_exact,"
           "grad_norm_relaxed,err_sq\n";
  long it_relaxed = 0, it_exact = 0, ev_relaxed = 0, ev_exact = 0;
  int bad_steps = 0;
  double err_sum = 0.0, err_max = 0.0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const ScenarioRun& run = runs[r];
    for (const StepLog& st : run.steps) {
      const long er = st.line_search_evals + 1;
      const long ee = st.exact_line_search_evals + 1;
      table << r << ',' << st.t << ',' << format_double(st.eps_hat) << ','
            << st.iterations << ',' << st.exact_iterations << ',' << er << ',' << ee
            << ',' << format_double(st.grad_norm) << ','
            << format_double(run.bound.rows[st.t].err_sq) << '\n';
      it_relaxed += st.iterations;
      it_exact += st.exact_iterations;
      ev_relaxed += er;
      ev_exact += ee;
      if (st.iterations > st.exact_iterations) ++bad_steps;
    }
    const double e = std::sqrt(run.bound.rows.back().err_sq);
    err_sum += e;
    err_max = std::max(err_max, e);
  }
  fs::create_directories(c.out);
  write_file(fs::path(c.out) / (s.name + "_bench.csv"), table.str());

  Json summary;
  summary["runs"] = c.runs;
  summary["seed"] = s.seed;
  summary["iterations_relaxed"] = it_relaxed;
  summary["iterations_exact"] = it_exact;
  summary["cost_evals_relaxed"] = ev_relaxed;
  summary["cost_evals_exact"] = ev_exact;
  summary["final_error_mean"] = runs.empty() ? 0.0 : err_sum / runs.size();
  summary["final_error_max"] = err_max;
  summary["steps_relaxed_above_exact"] = bad_steps;
  std::cout << summary.dump(2) << "\n";
  if (bad_steps > 0) {
    std::cerr << "error: relaxed stopping used more iterations than exact on "
              << bad_steps << " steps\n";
    return 1;
  }
  return 0;
}

int reproduce(const std::vector<Scenario>& scenarios, const Common& c) {
  bool ok = true;
  for (Scenario s : scenarios) {
    if (c.seed) s.seed = *c.seed;
    const bool noisy = s.noise_w.kind != NoiseLaw::Kind::kZero ||
                       s.noise_v.kind != NoiseLaw::Kind::kZero;
    const auto runs = run_many(s, noisy ? c.runs : 1, false);
    ok = emit_runs(s, runs, c) && ok;
  }
  return ok ? 0 : 1;
}

void add_common(CLI::App* app, Common& c, bool config) {
  if (config) app->add_option("--config", c.config, "scenario JSON")->required();
  app->add_option("--seed", c.seed, "override the scenario seed");
  app->add_option("--out", c.out, "output directory");
  app->add_flag("--svg", c.svg, "also write SVG plots");
  app->add_option("--runs", c.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-horizon estimation with inexact optimisation"};
  app.require_subcommand(1);

  Common est, cert, bench, fig1, fig2;
  std::string model;
  bench.runs = 20;
  auto* e = app.add_subcommand("estimate", "run a scenario and its bound monitor");
  add_common(e, est, true);
  auto* c = app.add_subcommand("certify", "certify a registered model");
  c->add_option("model", model, "model name")->required();
  add_common(c, cert, false);
  auto* b = app.add_subcommand("bench", "Exact against Relaxed stopping");
  add_common(b, bench, true);
  auto* f1 = app.add_subcommand("reproduce-fig1", "Example-1 runs (MHE3 and MHE5)");
  add_common(f1, fig1, false);
  auto* f2 = app.add_subcommand("reproduce-fig2", "Example-2 runs (MHE3 and MHE4)");
  add_common(f2, fig2, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (e->parsed()) return cmd_estimate(est);
    if (c->parsed()) return cmd_certify(model, cert);
    if (b->parsed()) return cmd_bench(bench);
    if (f1->parsed()) {
      return reproduce({scenario_fig1(true, false), scenario_fig1(true, true),
                        scenario_fig1(false, false), scenario_fig1(false, true)},
                       fig1);
    }
    if (f2->parsed()) {
      return reproduce({scenario_fig2(3, false), scenario_fig2(3, true),
                        scenario_fig2(4, false), scenario_fig2(4, true)},
                       fig2);
    }
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}

#include "mhe/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace mhe {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string child_pointer(const std::string& base, const std::string& key) {
  std::string esc;
  for (char c : key) {
    if (c == '~') {
      esc += "~0";
    } else if (c == '/') {
      esc += "~1";
    } else {
      esc += c;
    }
  }
  return base + "/" + esc;
}

std::string shown(const std::string& ptr) { return ptr.empty() ? "/" : ptr; }

[[noreturn]] void fail(const std::string& ptr, const std::string& what) {
  throw ConfigError(shown(ptr), what);
}

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) fail(ptr_, "expected an object");
  }

  const Json& require(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end()) fail(child_pointer(ptr_, key), "missing required key");
    seen_.insert(key);
    return *it;
  }

  const Json* optional(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string at(const std::string& key) const { return child_pointer(ptr_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

double as_number(const Json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "expected a number");
  return j.get<double>();
}

long long as_integer(const Json& j, const std::string& ptr) {
  if (!j.is_number_integer()) fail(ptr, "expected an integer");
  return j.get<long long>();
}

std::uint64_t as_u64(const Json& j, const std::string& ptr) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    fail(ptr, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string as_string(const Json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected a string");
  return j.get<std::string>();
}

VectorXd as_vector(const Json& j, const std::string& ptr) {
  if (!j.is_array()) fail(ptr, "expected an array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = as_number(j[i], ptr + "/" + std::to_string(i));
  }
  return v;
}

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Runs a constructor that validates its arguments and re-tags its error.
template <typename Fn>
auto checked(const std::string& ptr, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const ContractViolation& e) {
    fail(ptr, e.what());
  }
}

Json noise_to_json(const NoiseLaw& law) {
  switch (law.kind) {
    case NoiseLaw::Kind::kZero:
      return Json{{"kind", "zero"}};
    case NoiseLaw::Kind::kGaussian:
      return Json{{"kind", "gaussian"}, {"sigma", law.sigma}};
    case NoiseLaw::Kind::kUniform:
      return Json{{"kind", "uniform"}, {"a", law.a}, {"b", law.b}};
  }
  return {};
}

NoiseLaw noise_from_json(const Json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  const std::string kind = as_string(r.require("kind"), r.at("kind"));
  NoiseLaw law;
  if (kind == "zero") {
    law = NoiseLaw::zero();
  } else if (kind == "gaussian") {
    const double sigma = as_number(r.require("sigma"), r.at("sigma"));
    law = checked(r.at("sigma"), [&] { return NoiseLaw::gaussian(sigma); });
  } else if (kind == "uniform") {
    const double a = as_number(r.require("a"), r.at("a"));
    const double b = as_number(r.require("b"), r.at("b"));
    law = checked(ptr, [&] { return NoiseLaw::uniform(a, b); });
  } else {
    fail(r.at("kind"), "unknown noise kind '" + kind + "' (zero, gaussian, uniform)");
  }
  r.finish();
  return law;
}

Json input_to_json(const InputLaw& law) {
  if (law.kind == InputLaw::Kind::kZero) return Json{{"kind", "zero"}};
  return Json{{"kind", "sine"},
              {"params", Json{{"amplitude", law.amplitude}, {"frequency", law.frequency}}}};
}

InputLaw input_from_json(const Json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  const std::string kind = as_string(r.require("kind"), r.at("kind"));
  InputLaw law;
  if (kind == "zero") {
    law = InputLaw::zero();
  } else if (kind == "sine") {
    ObjectReader p(r.require("params"), r.at("params"));
    law = InputLaw::sine(as_number(p.require("amplitude"), p.at("amplitude")),
                         as_number(p.require("frequency"), p.at("frequency")));
    p.finish();
  } else {
    fail(r.at("kind"), "unknown input kind '" + kind + "' (zero, sine)");
  }
  r.finish();
  return law;
}

Json cost_to_json(const CostSpec& cost) {
  if (const auto* q = std::get_if<QuadraticCostSpec>(&cost)) {
    return Json{{"type", "quadratic"}, {"mu", q->mu},   {"nu", q->nu},
                {"omega", q->omega},   {"eta", q->eta}, {"N", q->horizon}};
  }
  const auto& m = std::get<MaxFormCostSpec>(cost);
  return Json{{"type", "maxform"},
              {"N", m.horizon},
              {"beta_x", kl_to_json(m.beta_x)},
              {"beta_w", kl_to_json(m.beta_w)},
              {"beta_y", kl_to_json(m.beta_y)},
              {"beta_v", kl_to_json(m.beta_v)}};
}

int as_horizon(const Json& j, const std::string& ptr) {
  const long long n = as_integer(j, ptr);
  if (n < 1 || n > 100000) fail(ptr, "N must lie in [1, 100000]");
  return static_cast<int>(n);
}

CostSpec cost_from_json(const Json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  const std::string type = as_string(r.require("type"), r.at("type"));
  CostSpec out;
  if (type == "quadratic") {
    QuadraticCostSpec q;
    q.mu = as_number(r.require("mu"), r.at("mu"));
    q.nu = as_number(r.require("nu"), r.at("nu"));
    q.omega = as_number(r.require("omega"), r.at("omega"));
    q.eta = as_number(r.require("eta"), r.at("eta"));
    q.horizon = as_horizon(r.require("N"), r.at("N"));
    checked(ptr, [&] { q.validate(); });
    out = q;
  } else if (type == "maxform") {
    MaxFormCostSpec m;
    m.horizon = as_horizon(r.require("N"), r.at("N"));
    m.beta_x = kl_from_json(r.require("beta_x"), r.at("beta_x"));
    m.beta_w = kl_from_json(r.require("beta_w"), r.at("beta_w"));
    m.beta_y = kl_from_json(r.require("beta_y"), r.at("beta_y"));
    m.beta_v = kl_from_json(r.require("beta_v"), r.at("beta_v"));
    out = m;
  } else {
    fail(r.at("type"), "unknown cost type '" + type + "' (quadratic, maxform)");
  }
  r.finish();
  return out;
}

Json estimator_to_json(const EstimatorConfig& e) {
  Json j;
  j["cost"] = cost_to_json(e.cost);
  j["stop"] = e.stop_mode == StopMode::kExact ? "exact" : "relaxed";
  j["epsilon"] = e.epsilon;
  j["max_iters"] = e.max_iters;
  j["starts"] = e.starts;
  j["tau_ladder"] = e.tau_ladder;
  j["stage_max_iters"] = e.stage_max_iters;
  if (e.certificate) {
    j["certificate"] = Json{{"c_x", e.certificate->c_x},
                            {"c_v", e.certificate->c_v},
                            {"c_w", e.certificate->c_w},
                            {"eta", e.certificate->eta}};
  }
  return j;
}

EstimatorConfig estimator_from_json(const Json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  EstimatorConfig e;
  e.cost = cost_from_json(r.require("cost"), r.at("cost"));
  if (const Json* s = r.optional("stop")) {
    const std::string mode = as_string(*s, r.at("stop"));
    if (mode == "exact") {
      e.stop_mode = StopMode::kExact;
    } else if (mode == "relaxed") {
      e.stop_mode = StopMode::kRelaxed;
    } else {
      fail(r.at("stop"), "unknown stop mode '" + mode + "' (exact, relaxed)");
    }
  }
  if (const Json* v = r.optional("epsilon")) e.epsilon = as_number(*v, r.at("epsilon"));
  const auto positive_int = [&](const char* key, int& dst) {
    if (const Json* v = r.optional(key)) {
      const long long n = as_integer(*v, r.at(key));
      if (n < 1 || n > 100000000) fail(r.at(key), "must be a positive integer");
      dst = static_cast<int>(n);
    }
  };
  positive_int("max_iters", e.max_iters);
  positive_int("starts", e.starts);
  positive_int("stage_max_iters", e.stage_max_iters);
  if (const Json* v = r.optional("tau_ladder")) {
    const VectorXd taus = as_vector(*v, r.at("tau_ladder"));
    e.tau_ladder.assign(taus.data(), taus.data() + taus.size());
  }
  if (const Json* c = r.optional("certificate")) {
    ObjectReader cr(*c, r.at("certificate"));
    ExponentialCertificate cert;
    cert.c_x = as_number(cr.require("c_x"), cr.at("c_x"));
    cert.c_v = as_number(cr.require("c_v"), cr.at("c_v"));
    cert.c_w = as_number(cr.require("c_w"), cr.at("c_w"));
    cert.eta = as_number(cr.require("eta"), cr.at("eta"));
    cr.finish();
    checked(r.at("certificate"), [&] { cert.validate(); });
    e.certificate = cert;
  }
  r.finish();
  return e;
}

}  // namespace

Json kl_to_json(const KLFunction& f) {
  Json j{{"kappa", f.kappa()}, {"q", f.q()}, {"eta_b", f.eta_b()}};
  if (f.family() == KLFunction::Family::kLogSupply) {
    j["family"] = "log_supply";
    j["c1"] = f.c1();
  } else if (f.family() == KLFunction::Family::kLogState) {
    j["family"] = "log_state";
    j["c1"] = f.c1();
  }
  return j;
}

KLFunction kl_from_json(const Json& j, const std::string& pointer) {
  ObjectReader r(j, pointer);
  const double kappa = as_number(r.require("kappa"), r.at("kappa"));
  const double q = as_number(r.require("q"), r.at("q"));
  const double eta_b = as_number(r.require("eta_b"), r.at("eta_b"));
  std::string family = "power";
  if (const Json* f = r.optional("family")) family = as_string(*f, r.at("family"));
  KLFunction out;
  if (family == "power") {
    out = checked(pointer, [&] { return KLFunction::power(kappa, q, eta_b); });
  } else if (family == "log_supply" || family == "log_state") {
    const double c1 = as_number(r.require("c1"), r.at("c1"));
    out = checked(pointer, [&] {
      return family == "log_supply" ? KLFunction::log_supply(kappa, q, eta_b, c1)
                                    : KLFunction::log_state(kappa, eta_b, c1);
    });
  } else {
    fail(r.at("family"),
         "unknown KL family '" + family + "' (power, log_supply, log_state)");
  }
  r.finish();
  return out;
}

Json scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["model"] = s.model;
  j["x0"] = vector_json(s.x0);
  j["xbar0"] = vector_json(s.xbar0);
  j["input"] = input_to_json(s.input);
  j["noise"] = Json{{"w", noise_to_json(s.noise_w)}, {"v", noise_to_json(s.noise_v)}};
  j["T"] = s.T;
  j["estimator"] = estimator_to_json(s.estimator);
  j["seed"] = s.seed;
  return j;
}

Scenario scenario_from_json(const Json& j) {
  ObjectReader r(j, "");
  Scenario s;
  if (const Json* n = r.optional("name")) s.name = as_string(*n, r.at("name"));
  s.model = as_string(r.require("model"), r.at("model"));
  checked(r.at("model"), [&] { (void)model_by_name(s.model); });
  s.x0 = as_vector(r.require("x0"), r.at("x0"));
  s.xbar0 = as_vector(r.require("xbar0"), r.at("xbar0"));
  if (const Json* in = r.optional("input")) s.input = input_from_json(*in, r.at("input"));
  if (const Json* nz = r.optional("noise")) {
    ObjectReader nr(*nz, r.at("noise"));
    if (const Json* w = nr.optional("w")) s.noise_w = noise_from_json(*w, nr.at("w"));
    if (const Json* v = nr.optional("v")) s.noise_v = noise_from_json(*v, nr.at("v"));
    nr.finish();
  }
  const long long T = as_integer(r.require("T"), r.at("T"));
  if (T < 0 || T > 10000000) fail(r.at("T"), "T must lie in [0, 1e7]");
  s.T = static_cast<int>(T);
  s.estimator = estimator_from_json(r.require("estimator"), r.at("estimator"));
  s.estimator.prior0 = s.xbar0;
  if (const Json* sd = r.optional("seed")) s.seed = as_u64(*sd, r.at("seed"));
  r.finish();
  checked("", [&] { s.validate(); });
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("JSON syntax error: ") + e.what());
  }
  return scenario_from_json(j);
}

std::uint64_t config_hash(const Json& j) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_run_csv(std::ostream& os, const ScenarioRun& run) {
  const Eigen::Index n = run.truth.states.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_true_" << i;
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_hat_" << i;
  os << ",err_sq,bound,satisfied,grad_norm,iters,eps_hat\n";
  for (std::size_t t = 0; t < run.estimates.size(); ++t) {
    os << t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(run.truth.states[t][i]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(run.estimates[t][i]);
    const BoundRow& b = run.bound.rows[t];
    os << ',' << format_double(b.err_sq) << ',' << format_double(b.bound) << ','
       << (b.satisfied ? 1 : 0);
    if (t == 0) {
      os << ",0,0,0\n";
    } else {
      const StepLog& s = run.steps[t - 1];
      os << ',' << format_double(s.grad_norm) << ',' << s.iterations << ','
         << format_double(s.eps_hat) << '\n';
    }
  }
}

Json run_summary(const Scenario& s, const ScenarioRun& run, std::uint64_t run_index) {
  const Json config = scenario_to_json(s);
  Json j;
  j["config"] = config;
  j["seed"] = s.seed;
  j["run"] = run_index;
  j["config_hash"] = hex64(config_hash(config));
  j["bound"] = run.guaranteed_bound ? "practical-exponential" : "max-form-diagnostic";
  j["lambda"] = run.bound.lambda;
  j["alpha"] = run.bound.alpha;
  j["violation_count"] = run.bound.violations();
  j["max_error"] = std::sqrt(run.bound.max_err_sq());
  j["final_error"] = run.bound.rows.empty() ? 0.0 : std::sqrt(run.bound.rows.back().err_sq);
  j["minimum_property_violations"] = run.minimum_violations();
  j["total_iterations"] = run.total_iterations();
  long capped = 0;
  for (const StepLog& st : run.steps) capped += st.hit_cap ? 1 : 0;
  j["steps_at_iteration_cap"] = capped;
  return j;
}

namespace {

struct Series {
  std::vector<double> y;
  std::string color;
  bool dashed = false;
};

std::string svg_plot(const std::string& title, const std::vector<Series>& series,
                     const std::string& ylabel) {
  constexpr double W = 800, H = 400, L = 60, R = 20, Tm = 30, B = 40;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t len = 0;
  for (const Series& s : series) {
    len = std::max(len, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) lo = hi = 0.0;
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double xs = len > 1 ? (W - L - R) / static_cast<double>(len - 1) : 0.0;
  const auto px = [&](std::size_t i) { return L + xs * static_cast<double>(i); };
  const auto py = [&](double v) { return Tm + (H - Tm - B) * (hi - v) / (hi - lo); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\""
     << H - B << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<text x=\"5\" y=\"" << Tm + 10 << "\" font-size=\"11\">" << format_double(hi)
     << "</text>\n<text x=\"5\" y=\"" << H - B << "\" font-size=\"11\">"
     << format_double(lo) << "</text>\n<text x=\"" << W / 2 << "\" y=\"" << H - 10
     << "\" font-size=\"12\">t</text>\n<text x=\"5\" y=\"" << H / 2
     << "\" font-size=\"12\">" << ylabel << "</text>\n";
  for (const Series& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << " points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << px(i) << ',' << py(s.y[i]) << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

std::string svg_states(const ScenarioRun& run) {
  std::vector<Series> series;
  const Eigen::Index n = run.truth.states.front().size();
  for (Eigen::Index i = 0; i < n; ++i) {
    Series truth{{}, kColors[i % 5], false};
    Series est{{}, kColors[i % 5], true};
    for (std::size_t t = 0; t < run.estimates.size(); ++t) {
      truth.y.push_back(run.truth.states[t][i]);
      est.y.push_back(run.estimates[t][i]);
    }
    series.push_back(std::move(truth));
    series.push_back(std::move(est));
  }
  return svg_plot("states (solid) and estimates (dashed)", series, "x");
}

std::string svg_error_bound(const ScenarioRun& run) {
  Series err{{}, kColors[0], false};
  Series bound{{}, kColors[1], true};
  for (const BoundRow& r : run.bound.rows) {
    err.y.push_back(std::log10(std::max(r.err_sq, 1e-300)));
    bound.y.push_back(std::log10(std::max(r.bound, 1e-300)));
  }
  return svg_plot("squared error (solid) and bound (dashed)", {err, bound}, "log10");
}

}  // namespace mhe

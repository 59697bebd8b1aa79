#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "mhe/errors.hpp"
#include "mhe/examples.hpp"

namespace mhe {

using Json = nlohmann::ordered_json;

/// Malformed configuration; `pointer` locates the offending value.
class ConfigError : public ContractViolation {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : ContractViolation(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

Json kl_to_json(const KLFunction& f);
KLFunction kl_from_json(const Json& j, const std::string& pointer = "");

Json scenario_to_json(const Scenario& s);
/// Strict: unknown keys, missing keys and type errors raise ConfigError.
Scenario scenario_from_json(const Json& j);
Scenario load_scenario(const std::string& path);

/// FNV-1a of the canonical dump.
std::uint64_t config_hash(const Json& j);
std::string hex64(std::uint64_t v);

/// Columns t, x_true_i, x_hat_i, err_sq, bound, satisfied, grad_norm, iters,
/// eps_hat; one row per t = 0..T.
void write_run_csv(std::ostream& os, const ScenarioRun& run);

Json run_summary(const Scenario& s, const ScenarioRun& run, std::uint64_t run_index);

/// True against estimated state components over time.
std::string svg_states(const ScenarioRun& run);
/// Squared error against the bound, log scale.
std::string svg_error_bound(const ScenarioRun& run);

}  // namespace mhe

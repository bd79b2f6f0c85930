#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dinavd/dynamics.hpp"
#include "dinavd/solvers.hpp"

namespace dinavd {

/// Parse or validation failure, with the offending line when known.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// TOML subset: [section] headers, key = value, '#' comments; values are
// strings, numbers, booleans, or one-line arrays of numbers or strings.

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;

struct ConfigEntry {
  ConfigValue value;
  int line = 0;
};

/// Keys are "section.key" ("key" at top level).
using ConfigTable = std::map<std::string, ConfigEntry>;

ConfigTable parse_config_text(std::string_view text);

// ---------------------------------------------------------------------------

inline constexpr int kConfigSchemaVersion = 1;

enum class SystemTag { avd, dinavd2, dinavd1, gdinavd, perturbed, ifb_avd, fista, fb };

const std::vector<std::string>& system_tags();
std::string to_string(SystemTag tag);
SystemTag parse_system_tag(std::string_view s);  // throws ConfigError naming valid tags
bool is_discrete(SystemTag tag);

struct ProblemChoice {
  std::string id;
  std::uint64_t seed = kDefaultSeed;
};

struct PerturbationChoice {
  std::string name = "none";  ///< none | power (coeffs c, p: c t^-p) | constant (coeffs c)
  std::vector<double> coeffs;
};

struct DiagnosticsRequest {
  std::vector<std::string> analyses;  ///< lyapunov, energy, rate, tail, little_o
  std::optional<double> lambda;
  std::optional<std::pair<double, double>> rate_window;
  std::optional<std::pair<double, double>> little_o_head;
  std::optional<std::pair<double, double>> little_o_tail;

  bool wants(std::string_view analysis) const;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  ProblemChoice problem;
  SystemTag system = SystemTag::dinavd2;
  /// DynamicsParams for continuous systems, AlgoParams for discrete ones.
  std::variant<DynamicsParams, AlgoParams> params;
  /// Starting point and velocity for discrete runs (continuous runs keep
  /// them in DynamicsParams). Empty means "use the default".
  Vector x0;
  Vector v0;
  std::optional<PerturbationChoice> perturbation;
  DiagnosticsRequest diagnostics;
  std::string output_dir = "out";
};

/// Command-line overrides applied on top of a parsed file.
struct ConfigOverrides {
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> t_end;
  std::optional<double> step;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::string& path);
void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o);
/// Cross-field checks (parameter kind vs system, lambda vs alpha, ...).
void validate(const ExperimentConfig& cfg);

}  // namespace dinavd

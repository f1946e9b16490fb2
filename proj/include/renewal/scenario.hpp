#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "renewal/bounds.hpp"
#include "renewal/exact.hpp"
#include "renewal/kernel.hpp"

namespace renewal {

/// Unreadable file, malformed JSON or a field of the wrong shape.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

struct ChainConfig {
  KernelSchedule schedule;
  std::optional<BirthDeathSpec> birth_death;
  std::vector<double> initial;
};

struct DominationConfig {
  /// Random-walk parameter; when absent an explicit G must be given.
  std::optional<double> p;
  std::size_t N = 200;
  std::optional<double> mu_hat;
  std::optional<std::vector<double>> G;
  std::optional<double> tail_bound;
};

enum class GammaSource { Analytic, Empirical, Fixed };

struct GammaConfig {
  GammaSource source = GammaSource::Analytic;
  Time n0 = 0;
  /// Used by the fixed source.
  std::optional<double> value;
  std::vector<Time> t_grid{0, 1, 2, 5, 10, 20, 50};
  std::vector<Time> lag_grid{0, 1, 2, 3, 5, 10, 20};
  std::size_t n_paths = 20000;
  bool swapped = false;
};

struct ConditionConfig {
  std::vector<Time> t_grid{0, 1, 2, 5, 10};
  /// Defaults to the whole target set.
  std::vector<State> x_grid;
  std::size_t max_n = 50;
  std::size_t n_paths = 20000;
};

struct ExactConfig {
  Time horizon = 5000;
  std::size_t product_cap = kDefaultProductCap;
};

struct Scenario {
  std::string name = "scenario";
  ChainConfig chain1;
  ChainConfig chain2;
  Time horizon = 1000;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
  DominationConfig domination;
  GammaConfig gamma;
  ConditionConfig condition;
  ExactConfig exact;
  std::size_t trial_tail_n = 50;
  bool include_first_trial = false;

  /// The config with every default filled in, embedded in reports.
  nlohmann::json resolved;
};

/// Throws ConfigError on shape problems and ValidationError on values
/// outside their documented domains.
Scenario parse_scenario(const nlohmann::json& config);

/// Reads and parses a config file; malformed JSON is reported with its
/// line and column.
Scenario load_scenario(const std::filesystem::path& path);

/// Reference birth-death instance: both chains alpha = 0.75 everywhere, cap 50, both
/// start at 0, p = 0.75.
nlohmann::json sec3_config();

/// Rebuilds the resolved config after fields were changed in code.
void refresh_resolved(Scenario& scenario);

}  // namespace renewal

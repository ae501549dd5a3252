#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leafheat/config.hpp"
#include "leafheat/dirichlet.hpp"

namespace leafheat {

/// Built-in smooth test functions for a system, in a fixed order.
std::vector<PhaseFunction> phase_functions(const HyperbolicSystem& sys);

/// Command-line values that take precedence over config keys.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cache_dir;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<int> n;
};

/// Applies overrides to a raw config; `--n` is the quasi-invariance power or
/// the SRB order for srb-estimate.
void apply_overrides(nlohmann::json& config, const Overrides& o, const std::string& experiment);

struct RunOutput {
  std::string csv;
  bool cache_hit = false;
};

/// Runs the configured experiment and returns the CSV text.
RunOutput run_experiment(const ExperimentConfig& cfg);

/// Runs and writes to cfg.output (or returns the text when no output is set).
RunOutput run(const ExperimentConfig& cfg);

}  // namespace leafheat

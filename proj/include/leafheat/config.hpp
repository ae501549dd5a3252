#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "leafheat/srb.hpp"

namespace leafheat {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

const std::vector<std::string>& experiment_names();

/// Validated experiment description. `params` holds the experiment's keys with
/// defaults filled in.
struct ExperimentConfig {
  nlohmann::json system;
  RectangleSpec rectangle;
  SRBSpec srb;
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();
  std::string output;
  std::string cache_dir = ".leafheat-cache";
  unsigned threads = 0;
  std::uint64_t seed = 1;

  HyperbolicSystem build_system() const;
  /// Canonical form; parse_config(to_json()) round-trips.
  nlohmann::json to_json() const;
  std::string hash() const;
};

/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
/// `experiment` overrides the config's experiment type when non-empty.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& experiment = "");
ExperimentConfig load_config(const std::string& path, const std::string& experiment = "");

}  // namespace leafheat

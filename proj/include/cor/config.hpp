#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cor/dataset.hpp"
#include "cor/noise.hpp"
#include "json.hpp"

// Run configuration shared by the command-line subcommands.
namespace cor {

struct RunConfig {
  std::vector<std::filesystem::path> environment_paths;
  std::vector<std::filesystem::path> lexicon_paths;
  dataset::GenerationPlan plan;
  std::filesystem::path output_dir = "cor_out";
  std::optional<std::uint64_t> seed;

  /// Shipped data files and the default plan, with the default seed set.
  static RunConfig defaults();

  /// Throws UsageError for missing files or an invalid plan.
  void validate() const;

  /// Loads every environment and lexicon.
  dataset::Resources load_resources() const;
};

/// Environment variable naming the config file used when `--config` is absent.
inline constexpr const char* kConfigEnvVar = "COR_CONFIG";

nlohmann::json to_json(const noise::CorruptionConfig& c);
nlohmann::json to_json(const noise::SeverityThresholds& t);
nlohmann::json to_json(const noise::SeverityMixture& m);
nlohmann::json to_json(const dataset::GenerationPlan& plan);
nlohmann::json to_json(const RunConfig& config);

/// Fields absent from `j` keep the values already in the target.
void merge(noise::CorruptionConfig& c, const nlohmann::json& j);
void merge(noise::SeverityThresholds& t, const nlohmann::json& j);
void merge(noise::SeverityMixture& m, const nlohmann::json& j);
void merge(dataset::GenerationPlan& plan, const nlohmann::json& j);

/// Relative paths resolve against `base_dir`. Throws UsageError on unknown keys or
/// mistyped values.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace cor

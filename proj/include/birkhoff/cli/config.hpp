#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace birkhoff::cli {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
std::string tool_version();

// A fully resolved run configuration: subcommand defaults, then the config
// file, then command-line overrides. Unknown keys are rejected at every level.
struct RunConfig {
  std::string subcommand;
  Json values;  // every key of the subcommand's schema, defaults filled in
  int threads = 0;  // 0 keeps the OpenMP default
  std::string output_dir = "results";
  bool use_cache = true;
};

bool is_subcommand(const std::string& name);

// Defaults for a subcommand as a JSON object.
Json default_values(const std::string& subcommand);

// Merges overlay into base, rejecting keys the schema does not know and values
// of the wrong type. Throws ConfigError naming the offending key.
void merge_checked(const std::string& subcommand, Json& base, const Json& overlay,
                   const std::string& origin);

// Reads a JSON config file. Throws ConfigError on I/O or syntax problems.
Json read_config_file(const std::string& path);

RunConfig resolve(const std::string& subcommand, const std::optional<std::string>& config_path,
                  const Json& overrides);

// Sorted-key compact JSON of everything that affects results (threads and the
// output directory excluded), prefixed with the subcommand and tool version.
std::string canonical_text(const RunConfig& config);
std::string config_hash(const RunConfig& config);

std::string sha256_hex(const std::string& data);

}  // namespace birkhoff::cli

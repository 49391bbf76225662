#pragma once

#include <string>
#include <vector>

#include "birkhoff/cli/config.hpp"

namespace birkhoff::cli {

struct RunManifest {
  std::string config_hash;
  std::string timestamp;
  std::string tool_version;
  std::string subcommand;
  std::vector<std::string> output_paths;
  bool cache_hit = false;
  int schema_version = kSchemaVersion;
};

Json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const Json& doc);

// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

}  // namespace birkhoff::cli

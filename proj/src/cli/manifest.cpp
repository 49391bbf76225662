#include "birkhoff/cli/manifest.hpp"

#include <chrono>
#include <ctime>

#include "birkhoff/errors.hpp"

namespace birkhoff::cli {

Json to_json(const RunManifest& m) {
  return Json{{"config_hash", m.config_hash},   {"timestamp", m.timestamp},
              {"tool_version", m.tool_version}, {"subcommand", m.subcommand},
              {"output_paths", m.output_paths}, {"cache_hit", m.cache_hit},
              {"schema_version", m.schema_version}};
}

RunManifest manifest_from_json(const Json& doc) {
  try {
    RunManifest m;
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.timestamp = doc.at("timestamp").get<std::string>();
    m.tool_version = doc.at("tool_version").get<std::string>();
    m.subcommand = doc.at("subcommand").get<std::string>();
    m.output_paths = doc.at("output_paths").get<std::vector<std::string>>();
    m.cache_hit = doc.value("cache_hit", false);
    m.schema_version = doc.at("schema_version").get<int>();
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace birkhoff::cli

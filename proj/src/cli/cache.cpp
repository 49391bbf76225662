#include "birkhoff/cli/cache.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

#include "birkhoff/errors.hpp"

namespace birkhoff::cli {
namespace {

namespace fs = std::filesystem;

Json payload_json(const RunPayload& p) {
  Json artifacts = Json::object();
  for (const auto& [name, text] : p.artifacts) artifacts[name] = text;
  return Json{{"summary", p.summary}, {"artifacts", artifacts}};
}

}  // namespace

fs::path default_cache_dir() {
  if (const char* dir = std::getenv("BIRKHOFF_CACHE_DIR"); dir && *dir) return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "birkhoff";
  if (const char* home = std::getenv("HOME"); home && *home)
    return fs::path(home) / ".cache" / "birkhoff";
  return fs::temp_directory_path() / "birkhoff-cache";
}

ResultCache::ResultCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path ResultCache::entry_path(const std::string& hash) const { return dir_ / (hash + ".json"); }

std::optional<RunPayload> ResultCache::load(const std::string& hash) const {
  const fs::path path = entry_path(hash);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError("cannot read cache entry " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();

  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw CacheError("corrupt cache entry " + path.string() + ": " + e.what());
  }
  try {
    if (doc.at("schema_version").get<int>() != kSchemaVersion)
      throw CacheError("cache entry " + path.string() + " has a different schema version");
    if (doc.at("config_hash").get<std::string>() != hash)
      throw CacheError("cache entry " + path.string() + " belongs to another config");
    const Json& payload = doc.at("payload");
    if (sha256_hex(payload.dump()) != doc.at("payload_sha256").get<std::string>())
      throw CacheError("cache entry " + path.string() + " fails its checksum");
    RunPayload out;
    out.summary = payload.at("summary");
    for (const auto& [name, text] : payload.at("artifacts").items())
      out.artifacts[name] = text.get<std::string>();
    return out;
  } catch (const Json::exception& e) {
    throw CacheError("malformed cache entry " + path.string() + ": " + e.what());
  }
}

void ResultCache::store(const std::string& hash, const RunPayload& payload) const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw CacheError("cannot create cache directory " + dir_.string() + ": " + ec.message());

  const Json body = payload_json(payload);
  const Json doc{{"schema_version", kSchemaVersion},
                 {"config_hash", hash},
                 {"payload", body},
                 {"payload_sha256", sha256_hex(body.dump())}};

  // Write then rename so a reader never sees a half-written entry.
  const fs::path final_path = entry_path(hash);
  const fs::path tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot write cache entry " + tmp.string());
    out << doc.dump() << '\n';
    if (!out) throw CacheError("cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, final_path, ec);
  if (ec) throw CacheError("cannot install cache entry " + final_path.string() + ": " + ec.message());
}

}  // namespace birkhoff::cli

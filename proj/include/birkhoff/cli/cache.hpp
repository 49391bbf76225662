#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "birkhoff/cli/config.hpp"

namespace birkhoff::cli {

// Everything a run produces except its timestamp: the summary document and the
// text of each artifact keyed by file name.
struct RunPayload {
  Json summary;
  std::map<std::string, std::string> artifacts;
};

// $BIRKHOFF_CACHE_DIR, else $XDG_CACHE_HOME/birkhoff, else ~/.cache/birkhoff.
std::filesystem::path default_cache_dir();

class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path entry_path(const std::string& hash) const;

  // nullopt when there is no entry. Throws CacheError when an entry exists but
  // cannot be parsed or its checksum does not match.
  std::optional<RunPayload> load(const std::string& hash) const;
  void store(const std::string& hash, const RunPayload& payload) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace birkhoff::cli

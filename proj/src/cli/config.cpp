#include "birkhoff/cli/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>

#include "birkhoff/errors.hpp"

#ifndef BIRKHOFF_VERSION
#define BIRKHOFF_VERSION "0.0.0"
#endif

namespace birkhoff::cli {
namespace {

enum class Kind { Number, OptNumber, Integer, String, Bool, Numbers, Integers, Ld, Solver };

const std::map<std::string, Kind>& ld_schema() {
  static const std::map<std::string, Kind> s = {
      {"C", Kind::Number}, {"delta", Kind::Number}, {"M", Kind::Number},
      {"C_certified", Kind::Bool}};
  return s;
}

const std::map<std::string, Kind>& solver_schema() {
  static const std::map<std::string, Kind> s = {
      {"degree", Kind::Integer},         {"k_max", Kind::Integer},
      {"tail_correction", Kind::Bool},   {"k_direct", Kind::Integer},
      {"beta_min", Kind::Number},        {"beta_max", Kind::Number},
      {"derivative_step", Kind::Number}};
  return s;
}

const std::map<std::string, std::map<std::string, Kind>>& schemas() {
  static const std::map<std::string, std::map<std::string, Kind>> s = {
      {"asymptotics",
       {{"map", Kind::String},
        {"observable", Kind::String},
        {"source", Kind::String},
        {"mean", Kind::OptNumber},
        {"eps_grid", Kind::Numbers},
        {"n_max", Kind::Integer},
        {"samples", Kind::Integer},
        {"seed", Kind::Integer},
        {"ld", Kind::Ld},
        {"tail_rel_tol", Kind::Number},
        {"checkpoints", Kind::Integers},
        {"levy_channel", Kind::Bool},
        {"levy_eps_grid", Kind::Numbers},
        {"autocov_lags", Kind::Integer},
        {"autocov_burn_in", Kind::Integer},
        {"solver", Kind::Solver}}},
      {"iid-baseline",
       {{"dist", Kind::String},
        {"mode", Kind::String},
        {"eps_grid", Kind::Numbers},
        {"n_max", Kind::Integer},
        {"samples", Kind::Integer},
        {"seed", Kind::Integer},
        {"sigma", Kind::Number},
        {"tail_rel_tol", Kind::Number},
        {"checkpoints", Kind::Integers}}},
      {"pressure",
       {{"solver", Kind::Solver}, {"beta_grid", Kind::Numbers}, {"alpha_grid", Kind::Numbers}}},
      {"cf", {{"input", Kind::String}, {"digits", Kind::Integer}, {"precision", Kind::Integer}}},
      {"gaussian",
       {{"rho", Kind::Number},
        {"tail_k", Kind::OptNumber},
        {"lw_eps", Kind::OptNumber},
        {"sigma", Kind::Number}}},
  };
  return s;
}

const std::map<std::string, Kind>& schema_for(const std::string& sub) {
  auto it = schemas().find(sub);
  if (it == schemas().end()) throw ConfigError("unknown subcommand '" + sub + "'");
  return it->second;
}

Json grid(double lo, double hi, double step) {
  Json out = Json::array();
  const int count = static_cast<int>(std::llround((hi - lo) / step));
  for (int i = 0; i <= count; ++i) out.push_back(std::round((lo + step * i) * 1e12) / 1e12);
  return out;
}

// Validated copy of v. Numbers are stored as doubles so 1 and 1.0 hash alike.
Json check_value(const std::string& key, Kind kind, const Json& v, const std::string& origin);

Json check_object(const std::string& key, const std::map<std::string, Kind>& schema,
                  const Json& v, const std::string& origin) {
  if (!v.is_object()) throw ConfigError(origin + ": '" + key + "' must be an object");
  Json out = Json::object();
  for (const auto& [k, sub] : v.items()) {
    auto it = schema.find(k);
    if (it == schema.end())
      throw ConfigError(origin + ": unknown key '" + key + "." + k + "'");
    out[k] = check_value(key + "." + k, it->second, sub, origin);
  }
  return out;
}

Json check_value(const std::string& key, Kind kind, const Json& v, const std::string& origin) {
  const auto bad = [&](const char* want) {
    return ConfigError(origin + ": '" + key + "' must be " + want + ", got " + v.dump());
  };
  switch (kind) {
    case Kind::Number:
      if (!v.is_number()) throw bad("a number");
      return Json(v.get<double>());
    case Kind::OptNumber:
      if (v.is_null()) return v;
      if (!v.is_number()) throw bad("a number or null");
      return Json(v.get<double>());
    case Kind::Integer:
      if (!v.is_number_integer() || v.get<long long>() < 0) throw bad("a non-negative integer");
      return Json(v.get<std::uint64_t>());
    case Kind::String:
      if (!v.is_string()) throw bad("a string");
      return v;
    case Kind::Bool:
      if (!v.is_boolean()) throw bad("a boolean");
      return v;
    case Kind::Numbers: {
      if (!v.is_array()) throw bad("an array of numbers");
      Json out = Json::array();
      for (const auto& x : v) {
        if (!x.is_number()) throw bad("an array of numbers");
        out.push_back(x.get<double>());
      }
      return out;
    }
    case Kind::Integers: {
      if (!v.is_array()) throw bad("an array of non-negative integers");
      Json out = Json::array();
      for (const auto& x : v) {
        if (!x.is_number_integer() || x.get<long long>() < 0)
          throw bad("an array of non-negative integers");
        out.push_back(x.get<std::uint64_t>());
      }
      return out;
    }
    case Kind::Ld:
      return check_object(key, ld_schema(), v, origin);
    case Kind::Solver:
      return check_object(key, solver_schema(), v, origin);
  }
  throw bad("valid");
}

}  // namespace

std::string tool_version() { return BIRKHOFF_VERSION; }

bool is_subcommand(const std::string& name) { return schemas().count(name) > 0; }

Json default_values(const std::string& sub) {
  if (sub == "asymptotics") {
    return Json{{"map", "gauss"},
                {"observable", "log_derivative"},
                {"source", "map"},
                {"mean", nullptr},
                {"eps_grid", {0.4, 0.35, 0.3, 0.25}},
                {"n_max", 2000},
                {"samples", 10000},
                {"seed", 1},
                {"ld", Json::object()},
                {"tail_rel_tol", 1e-3},
                {"checkpoints", Json::array()},
                {"levy_channel", false},
                {"levy_eps_grid", Json::array()},
                {"autocov_lags", 0},
                {"autocov_burn_in", 20},
                {"solver", Json::object()}};
  }
  if (sub == "iid-baseline") {
    return Json{{"dist", "gaussian"},   {"mode", "exact"}, {"eps_grid", {0.1, 0.05, 0.02}},
                {"n_max", 1000},        {"samples", 10000}, {"seed", 1},
                {"sigma", 1.0},         {"tail_rel_tol", 1e-3},
                {"checkpoints", Json::array()}};
  }
  if (sub == "pressure") {
    return Json{{"solver", Json::object()},
                {"beta_grid", grid(0.7, 2.0, 0.1)},
                {"alpha_grid", grid(1.2, 6.0, 0.4)}};
  }
  if (sub == "cf") return Json{{"input", "pi-3"}, {"digits", 20}, {"precision", 256}};
  if (sub == "gaussian") {
    return Json{{"rho", 0.1}, {"tail_k", nullptr}, {"lw_eps", nullptr}, {"sigma", 1.0}};
  }
  throw ConfigError("unknown subcommand '" + sub + "'");
}

void merge_checked(const std::string& sub, Json& base, const Json& overlay,
                   const std::string& origin) {
  if (!overlay.is_object()) throw ConfigError(origin + ": top level must be a JSON object");
  const auto& schema = schema_for(sub);
  for (const auto& [key, value] : overlay.items()) {
    auto it = schema.find(key);
    if (it == schema.end())
      throw ConfigError(origin + ": unknown key '" + key + "' for subcommand " + sub);
    Json checked = check_value(key, it->second, value, origin);
    if (checked.is_object() && base.contains(key) && base[key].is_object()) {
      for (const auto& [k, v] : checked.items()) base[key][k] = v;
    } else {
      base[key] = std::move(checked);
    }
  }
}

Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

RunConfig resolve(const std::string& sub, const std::optional<std::string>& config_path,
                  const Json& overrides) {
  RunConfig config;
  config.subcommand = sub;
  config.values = default_values(sub);

  const auto take_run_keys = [&](Json& doc, const std::string& origin) {
    if (!doc.is_object()) throw ConfigError(origin + ": top level must be a JSON object");
    if (doc.contains("threads")) {
      const Json& t = doc["threads"];
      if (!t.is_number_integer() || t.get<long long>() < 0)
        throw ConfigError(origin + ": 'threads' must be a non-negative integer");
      config.threads = t.get<int>();
      doc.erase("threads");
    }
    if (doc.contains("output_dir")) {
      if (!doc["output_dir"].is_string())
        throw ConfigError(origin + ": 'output_dir' must be a string");
      config.output_dir = doc["output_dir"].get<std::string>();
      doc.erase("output_dir");
    }
  };

  if (config_path) {
    Json file = read_config_file(*config_path);
    take_run_keys(file, *config_path);
    merge_checked(sub, config.values, file, *config_path);
  }
  Json flags = overrides;
  take_run_keys(flags, "command line");
  merge_checked(sub, config.values, flags, "command line");
  return config;
}

std::string canonical_text(const RunConfig& config) {
  return "birkhoff " + tool_version() + "\n" + config.subcommand + "\n" + config.values.dump() +
         "\n";
}

std::string config_hash(const RunConfig& config) { return sha256_hex(canonical_text(config)); }

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

}  // namespace birkhoff::cli

#include "birkhoff/cli/app.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/cli/manifest.hpp"
#include "birkhoff/errors.hpp"

namespace birkhoff::cli {
namespace {

namespace fs = std::filesystem;

// Values of flags that map onto config keys. Only flags given on the command
// line end up in the override document.
struct Flags {
  std::string config_path;
  std::string out;
  int threads = 0;
  bool no_cache = false;
  std::uint64_t seed = 0;
  std::vector<double> eps_grid;
  std::size_t samples = 0;
  std::size_t n_max = 0;
  std::vector<std::size_t> checkpoints;
  std::string map;
  std::string observable;
  std::string source;
  bool levy = false;
  std::string dist;
  std::string mode;
  double rho = 0.0;
  double tail_k = 0.0;
  double lw_eps = 0.0;
  double sigma = 0.0;
  std::string input;
  std::size_t digits = 0;
  unsigned precision = 0;
  std::vector<double> beta_grid;
  std::vector<double> alpha_grid;
};

struct Bound {
  CLI::Option* option;
  std::string key;
  std::function<Json()> value;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("cannot write " + path.string());
}

int run_resolved(RunConfig config, std::ostream& out, std::ostream& err) {
  if (config.threads > 0) omp_set_num_threads(config.threads);
  const std::string hash = config_hash(config);

  std::optional<RunPayload> payload;
  std::optional<ResultCache> cache;
  if (config.use_cache) {
    cache.emplace(default_cache_dir());
    payload = cache->load(hash);
  }
  const bool hit = payload.has_value();
  if (!hit) {
    payload = execute(config);
    payload->summary["config_hash"] = hash;
    payload->summary["config"] = config.values;
    if (cache) cache->store(hash, *payload);
  }

  std::error_code ec;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());

  RunManifest manifest;
  manifest.config_hash = hash;
  manifest.timestamp = utc_timestamp();
  manifest.tool_version = tool_version();
  manifest.subcommand = config.subcommand;
  manifest.cache_hit = hit;

  for (const auto& [name, text] : payload->artifacts) {
    write_file(dir / name, text);
    manifest.output_paths.push_back((dir / name).string());
  }
  Json summary = payload->summary;
  summary["timestamp"] = manifest.timestamp;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  manifest.output_paths.push_back((dir / "summary.json").string());
  write_file(dir / "manifest.json", to_json(manifest).dump(2) + "\n");

  if (config.subcommand == "cf") {
    out << payload->artifacts.at("cf.jsonl");
  } else {
    out << summary.dump(2) << '\n';
  }
  err << config.subcommand << ": " << manifest.output_paths.size() << " files in " << dir.string()
      << " (config " << hash.substr(0, 12) << (hit ? ", cached" : "") << ")\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deviation series, pressure and continued-fraction experiments", "birkhoff"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  Flags f;
  std::vector<Bound> bound;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
    bound.push_back({sub->add_option("--out", f.out, "output directory"), "output_dir",
                     [&] { return Json(f.out); }});
    bound.push_back({sub->add_option("--threads", f.threads, "worker threads (0 = default)")
                         ->check(CLI::NonNegativeNumber),
                     "threads", [&] { return Json(f.threads); }});
    sub->add_flag("--no-cache", f.no_cache, "ignore and do not update the result cache");
  };
  const auto opt = [&](CLI::App* sub, const std::string& flag, auto& var, const std::string& key,
                       const std::string& help) {
    CLI::Option* o = sub->add_option(flag, var, help);
    using T = std::decay_t<decltype(var)>;
    if constexpr (std::is_same_v<T, std::vector<double>> ||
                  std::is_same_v<T, std::vector<std::size_t>>) {
      o->delimiter(',');
    }
    bound.push_back({o, key, [&var] { return Json(var); }});
  };

  CLI::App* asym = app.add_subcommand("asymptotics", "Monte Carlo deviation series for an interval map");
  common(asym);
  opt(asym, "--seed", f.seed, "seed", "RNG seed");
  opt(asym, "--eps-grid", f.eps_grid, "eps_grid", "comma-separated, strictly decreasing");
  opt(asym, "--samples", f.samples, "samples", "Monte Carlo samples");
  opt(asym, "--n-max", f.n_max, "n_max", "largest n");
  opt(asym, "--checkpoints", f.checkpoints, "checkpoints", "n values for variance and KS");
  opt(asym, "--map", f.map, "map", "map id");
  opt(asym, "--observable", f.observable, "observable", "observable id");
  opt(asym, "--source", f.source, "source", "map, iid-gaussian or iid-bernoulli");
  bound.push_back({asym->add_flag("--levy", f.levy, "also count log q_n deviations"),
                   "levy_channel", [&] { return Json(f.levy); }});

  CLI::App* iid = app.add_subcommand("iid-baseline", "Exact or sampled i.i.d. baselines");
  common(iid);
  opt(iid, "--seed", f.seed, "seed", "RNG seed");
  opt(iid, "--dist", f.dist, "dist", "gaussian or bernoulli");
  opt(iid, "--mode", f.mode, "mode", "exact or monte-carlo");
  opt(iid, "--eps-grid", f.eps_grid, "eps_grid", "comma-separated, strictly decreasing");
  opt(iid, "--samples", f.samples, "samples", "Monte Carlo samples");
  opt(iid, "--n-max", f.n_max, "n_max", "largest n in the CSV / ensemble");
  opt(iid, "--sigma", f.sigma, "sigma", "Gaussian standard deviation");

  CLI::App* pres = app.add_subcommand("pressure", "Gauss-map pressure and Lyapunov spectrum");
  common(pres);
  opt(pres, "--beta-grid", f.beta_grid, "beta_grid", "comma-separated beta values");
  opt(pres, "--alpha-grid", f.alpha_grid, "alpha_grid", "comma-separated alpha values");

  CLI::App* cfc = app.add_subcommand("cf", "Continued-fraction digits and convergents");
  common(cfc);
  opt(cfc, "--input", f.input, "input", "p/q, decimal, or pi-3, e-2, golden, sqrt2-1");
  opt(cfc, "--digits", f.digits, "digits", "number of digits");
  opt(cfc, "--precision", f.precision, "precision", "bits for named constants");

  CLI::App* gau = app.add_subcommand("gaussian", "Gaussian tail series");
  common(gau);
  opt(gau, "--rho", f.rho, "rho", "series parameter");
  opt(gau, "--tail-k", f.tail_k, "tail_k", "also report the tail from K/rho^2");
  opt(gau, "--lw-eps", f.lw_eps, "lw_eps", "also report the log-weighted sum at eps");
  opt(gau, "--sigma", f.sigma, "sigma", "standard deviation for the log-weighted sum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Json overrides = Json::object();
    for (const auto& b : bound) {
      if (b.option->count() > 0) overrides[b.key] = b.value();
    }
    std::optional<std::string> path;
    if (!f.config_path.empty()) path = f.config_path;
    RunConfig config = resolve(sub->get_name(), path, overrides);
    config.use_cache = !f.no_cache;
    return run_resolved(std::move(config), out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const CacheError& e) {
    err << "cache error: " << e.what() << '\n';
    return 4;
  } catch (const RangeError& e) {
    err << "numerical error: " << e.what() << " (reachable window [" << e.lo() << ", " << e.hi()
        << "])\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const ArityError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const PartialOrbitError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const OrbitTerminated& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace birkhoff::cli

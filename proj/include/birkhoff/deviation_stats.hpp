#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace birkhoff::stats {

enum class SourceKind {
  Map,           // Birkhoff sums of an observable along orbits of an interval map
  IidGaussian,   // partial sums of i.i.d. standard normals
  IidBernoulli,  // partial sums of i.i.d. +-1/2 fair coin values
};

std::string to_string(SourceKind kind);
SourceKind source_from_string(const std::string& name);

// Large-deviation hypothesis Lambda_n^+(eps) <= C exp(-I(eps) n) and
// Lambda_n^-(eps) <= C exp(-I(-eps) n), used to certify series truncation.
struct LdParams {
  double C = 1.0;
  double delta = 1.0;
  double M = 1.0;
  bool C_certified = false;
  // I evaluated at a signed deviation; empty when no rate is known.
  std::function<double(double)> rate;
};

struct ExperimentConfig {
  std::string map_id = "gauss";
  std::string observable_id = "log_derivative";
  SourceKind source = SourceKind::Map;
  // Centering constant; defaults to the observable's invariant mean.
  std::optional<double> mean;
  std::vector<double> eps_grid;  // strictly decreasing
  std::size_t n_max = 1000;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  LdParams ld;
  double tail_rel_tol = 1e-3;
  // n values at which per-sample (S_n - n mean)/sqrt(n) is retained.
  std::vector<std::size_t> checkpoints;
  // Gauss map only: also count |log q_n / n - gamma| >= eps on the same orbits.
  bool levy_channel = false;
  std::vector<double> levy_eps_grid;  // defaults to eps_grid / 2
  // Lagged products for the autocovariance variance estimate (0 disables).
  std::size_t autocov_lags = 0;
  std::size_t autocov_burn_in = 20;

  // Throws ConfigError when the grid or budgets are invalid.
  void validate() const;
};

struct LambdaEstimate {
  double plus = 0.0;
  double minus = 0.0;
  double stderr_plus = 0.0;
  double stderr_minus = 0.0;
};

struct PerN {
  std::size_t n = 0;
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  double stderr_plus = 0.0;
  double stderr_minus = 0.0;
};

struct DeviationSeries {
  double eps = 0.0;
  std::vector<PerN> per_n;  // n = 1 .. truncation_n
  std::size_t truncation_n = 0;
  double tail_remainder = 0.0;  // LD bound on sum_{n > N} Lambda_n
  bool tail_certified = false;  // false when C is not a proven constant
  double value = 0.0;           // sum_{n <= N} Lambda_n
  double stderr = 0.0;
  double log_weighted = 0.0;    // sum_{n <= N} Lambda_n / n
  double log_weighted_stderr = 0.0;
};

struct VarianceEstimate {
  enum class Method { BatchMeans, Autocovariance };
  double sigma2 = 0.0;
  Method method = Method::BatchMeans;
  std::size_t n_used = 0;
  double stderr = 0.0;
  std::size_t lag_cutoff = 0;  // autocovariance only
  std::string warning;         // set when the estimate looks unreliable
};

struct KSReport {
  std::size_t n = 0;
  double delta_n = 0.0;
};

// Counts from one shared-sample run. Every sample serves every (eps, n), so
// monotonicity in eps holds exactly and all counts are integers.
struct EnsembleCounts {
  std::vector<double> eps;
  std::vector<double> levy_eps;
  std::size_t n_max = 0;
  std::size_t samples = 0;
  std::size_t terminated = 0;
  double mean = 0.0;
  // Indexed [e * n_max + (n - 1)].
  std::vector<std::int64_t> plus;
  std::vector<std::int64_t> minus;
  // Sum over samples of (number of n' <= n with a deviation)^2.
  std::vector<std::int64_t> cum_sq;
  // Same for the 1/n-weighted count. Accumulated exactly in fixed point with
  // scale 2^-32 and converted to double once, so it does not depend on the
  // order in which samples were reduced.
  std::vector<double> lw_sq;
  std::vector<std::int64_t> levy_plus;
  std::vector<std::int64_t> levy_minus;
  std::vector<std::int64_t> levy_cum_sq;
  std::vector<std::size_t> checkpoints;
  // checkpoint_values[c][i] = (S_n - n mean)/sqrt(n) for sample i at checkpoints[c].
  std::vector<std::vector<double>> checkpoint_values;
  // Per-sample time-averaged lagged products, samples x (lags + 1).
  std::size_t autocov_lags = 0;
  std::vector<double> autocov;

  std::size_t index(std::size_t e, std::size_t n) const { return e * n_max + (n - 1); }
};

// OpenMP kernel and its serial reference; identical results for any thread count.
EnsembleCounts run_ensemble(const ExperimentConfig& config);
EnsembleCounts run_ensemble_serial(const ExperimentConfig& config);

// Views on an ensemble.
LambdaEstimate lambda_at(const EnsembleCounts& counts, std::size_t e, std::size_t n);
LambdaEstimate levy_lambda_at(const EnsembleCounts& counts, std::size_t e, std::size_t n);
DeviationSeries build_series(const EnsembleCounts& counts, std::size_t e, const LdParams& ld,
                             double tail_rel_tol);
VarianceEstimate sigma2_batch_means(const EnsembleCounts& counts, std::size_t n);
VarianceEstimate sigma2_autocovariance(const EnsembleCounts& counts);
KSReport ks_from_ensemble(const EnsembleCounts& counts, std::size_t n, double sigma);

// Convenience entry points that run their own ensemble.
LambdaEstimate estimate_lambda_n(const ExperimentConfig& config, std::size_t n, double eps);
DeviationSeries lambda_series(const ExperimentConfig& config, double eps);
VarianceEstimate estimate_sigma2(const ExperimentConfig& config, std::size_t n_cal);
KSReport ks_distance(const ExperimentConfig& config, std::size_t n, double sigma);

// Kolmogorov distance between the empirical CDF of values and Phi.
double ks_statistic(std::vector<double> values);

// ---- limit extrapolation -----------------------------------------------------

struct SeriesPoint {
  double eps = 0.0;
  double value = 0.0;         // Lambda(eps)
  double stderr = 0.0;
  double log_weighted = 0.0;  // sum_n Lambda_n(eps) / n
  double log_weighted_stderr = 0.0;
};

struct HeydeEstimate {
  std::vector<double> eps;
  std::vector<double> scaled;  // eps^2 Lambda(eps)
  std::vector<double> scaled_stderr;
  double raw_smallest = 0.0;
  double limit = 0.0;  // intercept of a + b eps over the three smallest eps
  double slope = 0.0;
  double limit_stderr = 0.0;
  double limit_quadratic = 0.0;  // intercept of a + b eps^2 over the same points
};
HeydeEstimate heyde_limit_estimate(const std::vector<SeriesPoint>& points);

struct SpataruEstimate {
  std::vector<double> eps;
  std::vector<double> normalized;  // sum Lambda_n/n divided by -log eps
  std::vector<double> normalized_stderr;
  double target = 2.0;
  bool monotone_toward_target = false;
};
SpataruEstimate spataru_limit_estimate(const std::vector<SeriesPoint>& points);

// ---- exact i.i.d. oracles ------------------------------------------------------

// Chernoff rate of the +-1/2 coin: (1/2+e) log(1+2e) + (1/2-e) log(1-2e).
double bernoulli_rate(double eps);
// eps^2 / (2 sigma^2).
double gaussian_rate(double eps, double sigma = 1.0);

// Exact Lambda_n^{+-}(eps) for partial sums of +-1/2 coins, using the same
// floating-point predicate S_n/n >= eps as the Monte Carlo kernel.
LambdaEstimate bernoulli_lambda_n(std::size_t n, double eps);
// Exact Lambda_n^{+-}(eps) = Phi(-eps sqrt(n) / sigma) for Gaussian sums.
LambdaEstimate gaussian_lambda_n(std::size_t n, double eps, double sigma = 1.0);

// Exact series with the same truncation rule as build_series (C = 1 is a
// proven Chernoff constant for both sources).
SeriesPoint bernoulli_series(double eps, double tail_rel_tol = 1e-3);
SeriesPoint gaussian_series(double eps, double sigma = 1.0);

// Default LD parameters for an experiment when the rate is known in closed
// form (coin sources, Gaussian source, degenerate observables). Returns an
// empty rate otherwise; the caller supplies one (e.g. from the pressure solver).
LdParams default_ld_params(const ExperimentConfig& config);

}  // namespace birkhoff::stats

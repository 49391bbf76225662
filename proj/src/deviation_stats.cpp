#include "birkhoff/deviation_stats.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "birkhoff/errors.hpp"
#include "birkhoff/exact.hpp"
#include "birkhoff/gaussian.hpp"
#include "birkhoff/interval_map.hpp"
#include "birkhoff/numeric.hpp"
#include "birkhoff/rng.hpp"

namespace birkhoff::stats {

namespace {

constexpr std::uint64_t kPointStream = 0x4F52424954ull;
constexpr std::uint64_t kIidStream = 0x494944ull;
constexpr double kFixedScale = 4294967296.0;  // 2^32
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using u128 = unsigned __int128;

// Immutable per-run data shared by all workers.
struct Plan {
  ExperimentConfig config;
  std::shared_ptr<const IntervalMap> map;
  std::optional<Observable> observable;
  double mean = 0.0;
  unsigned bits = 0;
  double log_den = 0.0;
  bool levy = false;
  CounterRng point_rng{0, 0};
  CounterRng iid_rng{0, 0};
  std::vector<double> eps;
  std::vector<double> levy_eps;
};

Plan make_plan(const ExperimentConfig& config) {
  config.validate();
  Plan plan;
  plan.config = config;
  plan.eps = config.eps_grid;
  plan.point_rng = CounterRng(config.seed, kPointStream);
  plan.iid_rng = CounterRng(config.seed, kIidStream);
  if (config.source == SourceKind::Map) {
    plan.map = make_map(config.map_id);
    plan.observable = make_observable(config.observable_id, *plan.map);
    plan.mean = config.mean.value_or(plan.observable->mean());
    if (!std::isfinite(plan.mean)) {
      throw ConfigError("observable '" + config.observable_id + "' on map '" + config.map_id +
                        "' has no closed-form mean; set 'mean' explicitly");
    }
    const double bits = std::ceil(static_cast<double>(config.n_max) *
                                  plan.map->bits_per_step() * 1.25) + 256.0;
    plan.bits = static_cast<unsigned>(bits);
    plan.log_den = static_cast<double>(plan.bits) * std::numbers::ln2;
    if (config.levy_channel) {
      if (plan.map->id() != "gauss") throw ConfigError("levy_channel requires the gauss map");
      plan.levy = true;
      plan.levy_eps = config.levy_eps_grid;
      if (plan.levy_eps.empty()) {
        for (double e : config.eps_grid) plan.levy_eps.push_back(e / 2.0);
      }
    }
  } else {
    plan.mean = config.mean.value_or(0.0);
    if (config.levy_channel) throw ConfigError("levy_channel requires the gauss map");
  }
  return plan;
}

// Worker-local accumulators, laid out [n][e] for locality and transposed at the end.
struct Accumulator {
  std::size_t E = 0, Eq = 0, n_max = 0;
  std::vector<std::int64_t> plus, minus, cum_sq;
  std::vector<u128> lw_sq;
  std::vector<std::int64_t> levy_plus, levy_minus, levy_cum_sq;
  std::size_t terminated = 0;

  Accumulator(std::size_t e, std::size_t eq, std::size_t n)
      : E(e), Eq(eq), n_max(n), plus(e * n, 0), minus(e * n, 0), cum_sq(e * n, 0),
        lw_sq(e * n, 0), levy_plus(eq * n, 0), levy_minus(eq * n, 0), levy_cum_sq(eq * n, 0) {}

  void merge(const Accumulator& o) {
    for (std::size_t i = 0; i < plus.size(); ++i) {
      plus[i] += o.plus[i];
      minus[i] += o.minus[i];
      cum_sq[i] += o.cum_sq[i];
      lw_sq[i] += o.lw_sq[i];
    }
    for (std::size_t i = 0; i < levy_plus.size(); ++i) {
      levy_plus[i] += o.levy_plus[i];
      levy_minus[i] += o.levy_minus[i];
      levy_cum_sq[i] += o.levy_cum_sq[i];
    }
    terminated += o.terminated;
  }
};

struct SampleOutputs {
  std::vector<std::vector<double>>* checkpoint_values;
  std::vector<double>* autocov;
};

void run_sample(const Plan& plan, std::size_t i, Accumulator& acc, const SampleOutputs& out) {
  const ExperimentConfig& cfg = plan.config;
  const std::size_t E = plan.eps.size();
  const std::size_t Eq = plan.levy_eps.size();
  const std::size_t L = cfg.autocov_lags;

  std::vector<std::int64_t> cum(E, 0);
  std::vector<std::uint64_t> lw(E, 0);
  std::vector<std::int64_t> qcum(Eq, 0);
  std::vector<double> ring(L + 1, 0.0);
  std::vector<double> prod(L + 1, 0.0);
  std::size_t prod_count = 0;
  std::size_t next_checkpoint = 0;

  OrbitState state;
  if (cfg.source == SourceKind::Map) {
    mpz_class den = 1;
    den <<= plan.bits;
    state.point = {random_dyadic_numerator(plan.point_rng, i, plan.bits), den};
  }
  double r = 0.0;  // q_{n-1} / q_n
  double s = 0.0;
  for (std::size_t n = 1; n <= cfg.n_max; ++n) {
    double v = 0.0;
    switch (cfg.source) {
      case SourceKind::Map: {
        const auto step = plan.map->advance(state, *plan.observable);
        if (!step) {
          ++acc.terminated;
          goto done;
        }
        v = *step;
        break;
      }
      case SourceKind::IidGaussian:
        v = plan.iid_rng.normal(i, n - 1);
        break;
      case SourceKind::IidBernoulli: {
        const std::uint64_t word = plan.iid_rng.bits64(i, (n - 1) / 64);
        v = ((word >> ((n - 1) % 64)) & 1u) ? 0.5 : -0.5;
        break;
      }
    }
    s += v;
    {
      const double dn = static_cast<double>(n);
      const double dev = s / dn - plan.mean;
      const std::uint64_t weight = static_cast<std::uint64_t>(std::llround(kFixedScale / dn));
      std::int64_t* p = &acc.plus[(n - 1) * E];
      std::int64_t* m = &acc.minus[(n - 1) * E];
      std::int64_t* c2 = &acc.cum_sq[(n - 1) * E];
      u128* w2 = &acc.lw_sq[(n - 1) * E];
      for (std::size_t e = 0; e < E; ++e) {
        const bool up = dev >= plan.eps[e];
        const bool down = dev <= -plan.eps[e];
        p[e] += up;
        m[e] += down;
        if (up || down) {
          ++cum[e];
          lw[e] += weight;
        }
        c2[e] += cum[e] * cum[e];
        w2[e] += static_cast<u128>(lw[e]) * lw[e];
      }
      if (plan.levy) {
        // log q_n = log(D / den_n) - log(1 + r_n G^n x) with r_n = 1/(a_n + r_{n-1}).
        r = 1.0 / (state.last_digit + r);
        const double t = state.point.to_double();
        const double log_q = plan.log_den - log_abs(state.point.den) - std::log1p(r * t);
        const double qdev = log_q / dn - kLevy;
        std::int64_t* qp = &acc.levy_plus[(n - 1) * Eq];
        std::int64_t* qm = &acc.levy_minus[(n - 1) * Eq];
        std::int64_t* qc = &acc.levy_cum_sq[(n - 1) * Eq];
        for (std::size_t e = 0; e < Eq; ++e) {
          const bool up = qdev >= plan.levy_eps[e];
          const bool down = qdev <= -plan.levy_eps[e];
          qp[e] += up;
          qm[e] += down;
          if (up || down) ++qcum[e];
          qc[e] += qcum[e] * qcum[e];
        }
      }
      while (next_checkpoint < cfg.checkpoints.size() && cfg.checkpoints[next_checkpoint] == n) {
        (*out.checkpoint_values)[next_checkpoint][i] = (s - dn * plan.mean) / std::sqrt(dn);
        ++next_checkpoint;
      }
      if (L > 0) {
        const std::size_t t = n - 1;
        ring[t % (L + 1)] = v - plan.mean;
        if (t >= cfg.autocov_burn_in + L) {
          const double ft = ring[t % (L + 1)];
          for (std::size_t k = 0; k <= L; ++k) prod[k] += ft * ring[(t - k) % (L + 1)];
          ++prod_count;
        }
      }
    }
  }
done:
  if (L > 0) {
    double* row = out.autocov->data() + i * (L + 1);
    for (std::size_t k = 0; k <= L; ++k) {
      row[k] = prod_count > 0 ? prod[k] / static_cast<double>(prod_count) : kNaN;
    }
  }
}

EnsembleCounts finish(const Plan& plan, Accumulator& acc,
                      std::vector<std::vector<double>> checkpoint_values,
                      std::vector<double> autocov) {
  const ExperimentConfig& cfg = plan.config;
  EnsembleCounts out;
  out.eps = plan.eps;
  out.levy_eps = plan.levy_eps;
  out.n_max = cfg.n_max;
  out.samples = cfg.samples;
  out.terminated = acc.terminated;
  out.mean = plan.mean;
  const std::size_t E = plan.eps.size();
  const std::size_t Eq = plan.levy_eps.size();
  out.plus.resize(E * cfg.n_max);
  out.minus.resize(E * cfg.n_max);
  out.cum_sq.resize(E * cfg.n_max);
  out.lw_sq.resize(E * cfg.n_max);
  for (std::size_t n = 1; n <= cfg.n_max; ++n) {
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t src = (n - 1) * E + e;
      const std::size_t dst = out.index(e, n);
      out.plus[dst] = acc.plus[src];
      out.minus[dst] = acc.minus[src];
      out.cum_sq[dst] = acc.cum_sq[src];
      // exact integer -> double, then rescale by 2^-64 (exact)
      out.lw_sq[dst] = static_cast<double>(acc.lw_sq[src]) / (kFixedScale * kFixedScale);
    }
  }
  out.levy_plus.resize(Eq * cfg.n_max);
  out.levy_minus.resize(Eq * cfg.n_max);
  out.levy_cum_sq.resize(Eq * cfg.n_max);
  for (std::size_t n = 1; n <= cfg.n_max; ++n) {
    for (std::size_t e = 0; e < Eq; ++e) {
      const std::size_t src = (n - 1) * Eq + e;
      const std::size_t dst = e * cfg.n_max + (n - 1);
      out.levy_plus[dst] = acc.levy_plus[src];
      out.levy_minus[dst] = acc.levy_minus[src];
      out.levy_cum_sq[dst] = acc.levy_cum_sq[src];
    }
  }
  out.checkpoints = cfg.checkpoints;
  out.checkpoint_values = std::move(checkpoint_values);
  out.autocov_lags = cfg.autocov_lags;
  out.autocov = std::move(autocov);
  if (static_cast<double>(out.terminated) > 1e-3 * static_cast<double>(out.samples)) {
    throw IntegrityError("orbit termination rate " +
                         format_double(static_cast<double>(out.terminated) /
                                       static_cast<double>(out.samples)) +
                         " exceeds 0.1% of samples");
  }
  return out;
}

EnsembleCounts run(const ExperimentConfig& config, bool parallel) {
  const Plan plan = make_plan(config);
  const std::size_t E = plan.eps.size();
  const std::size_t Eq = plan.levy_eps.size();
  std::vector<std::vector<double>> checkpoint_values(config.checkpoints.size(),
                                                     std::vector<double>(config.samples, kNaN));
  std::vector<double> autocov(config.autocov_lags > 0
                                  ? config.samples * (config.autocov_lags + 1)
                                  : 0);
  const SampleOutputs outputs{&checkpoint_values, &autocov};
  Accumulator total(E, Eq, config.n_max);
  if (!parallel) {
    for (std::size_t i = 0; i < config.samples; ++i) run_sample(plan, i, total, outputs);
  } else {
    const auto count = static_cast<std::int64_t>(config.samples);
#pragma omp parallel
    {
      Accumulator local(E, Eq, config.n_max);
#pragma omp for schedule(dynamic, 64)
      for (std::int64_t i = 0; i < count; ++i) {
        run_sample(plan, static_cast<std::size_t>(i), local, outputs);
      }
      // integer counts: the merge order does not affect the result
#pragma omp critical
      total.merge(local);
    }
  }
  return finish(plan, total, std::move(checkpoint_values), std::move(autocov));
}

double binomial_stderr(double p, double n) { return std::sqrt(std::max(0.0, p * (1.0 - p)) / n); }

LambdaEstimate estimate_from(std::int64_t plus, std::int64_t minus, std::size_t samples) {
  const double n = static_cast<double>(samples);
  LambdaEstimate est;
  est.plus = static_cast<double>(plus) / n;
  est.minus = static_cast<double>(minus) / n;
  est.stderr_plus = binomial_stderr(est.plus, n);
  est.stderr_minus = binomial_stderr(est.minus, n);
  return est;
}

// Bound on sum_{n > N} C (e^{-I+ n} + e^{-I- n}).
double ld_tail(const LdParams& ld, double i_plus, double i_minus, std::size_t N) {
  double tail = 0.0;
  for (double rate : {i_plus, i_minus}) {
    if (std::isinf(rate)) continue;
    tail += ld.C * std::exp(-rate * static_cast<double>(N)) / (-std::expm1(-rate));
  }
  return tail;
}

void check_rates(double eps, double i_plus, double i_minus) {
  if (!(i_plus > 0.0) || !(i_minus > 0.0)) {
    throw TailCertificationError("rate function is not positive at eps = " + format_double(eps) +
                                 " (I(+eps) = " + format_double(i_plus) +
                                 ", I(-eps) = " + format_double(i_minus) + ")");
  }
}

double mean_of(const std::vector<double>& xs) {
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

std::vector<double> finite_only(const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

}  // namespace

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::Map:
      return "map";
    case SourceKind::IidGaussian:
      return "iid-gaussian";
    case SourceKind::IidBernoulli:
      return "iid-bernoulli";
  }
  return "map";
}

SourceKind source_from_string(const std::string& name) {
  if (name == "map") return SourceKind::Map;
  if (name == "iid-gaussian" || name == "gaussian") return SourceKind::IidGaussian;
  if (name == "iid-bernoulli" || name == "bernoulli") return SourceKind::IidBernoulli;
  throw ConfigError("unknown source '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (eps_grid.empty()) throw ConfigError("eps_grid is empty");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0) || !std::isfinite(eps_grid[i])) {
      throw ConfigError("eps_grid entries must be positive and finite");
    }
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) {
      throw ConfigError("eps_grid must be strictly decreasing");
    }
    if (!(eps_grid[i] < ld.delta)) throw ConfigError("eps_grid entries must be below delta");
  }
  for (std::size_t i = 1; i < levy_eps_grid.size(); ++i) {
    if (!(levy_eps_grid[i] < levy_eps_grid[i - 1]) || !(levy_eps_grid[i] > 0.0)) {
      throw ConfigError("levy_eps_grid must be positive and strictly decreasing");
    }
  }
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
  if (samples < 1000) throw ConfigError("samples must be at least 1000");
  if (!(tail_rel_tol > 0.0)) throw ConfigError("tail_rel_tol must be positive");
  if (!(ld.C > 0.0)) throw ConfigError("ld.C must be positive");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || checkpoints[i] > n_max) {
      throw ConfigError("checkpoints must lie in [1, n_max]");
    }
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw ConfigError("checkpoints must be strictly increasing");
    }
  }
  if (autocov_lags > 0 && n_max <= autocov_burn_in + 2 * autocov_lags) {
    throw ConfigError("n_max too small for the requested autocovariance lags");
  }
}

EnsembleCounts run_ensemble(const ExperimentConfig& config) { return run(config, true); }
EnsembleCounts run_ensemble_serial(const ExperimentConfig& config) { return run(config, false); }

LambdaEstimate lambda_at(const EnsembleCounts& c, std::size_t e, std::size_t n) {
  if (e >= c.eps.size() || n < 1 || n > c.n_max) throw std::out_of_range("lambda_at");
  return estimate_from(c.plus[c.index(e, n)], c.minus[c.index(e, n)], c.samples);
}

LambdaEstimate levy_lambda_at(const EnsembleCounts& c, std::size_t e, std::size_t n) {
  if (e >= c.levy_eps.size() || n < 1 || n > c.n_max) throw std::out_of_range("levy_lambda_at");
  const std::size_t idx = e * c.n_max + (n - 1);
  return estimate_from(c.levy_plus[idx], c.levy_minus[idx], c.samples);
}

DeviationSeries build_series(const EnsembleCounts& c, std::size_t e, const LdParams& ld,
                             double tail_rel_tol) {
  if (e >= c.eps.size()) throw std::out_of_range("build_series");
  const double eps = c.eps[e];
  if (!ld.rate) {
    throw TailCertificationError("no rate function available to certify the series tail");
  }
  const double i_plus = ld.rate(eps);
  const double i_minus = ld.rate(-eps);
  check_rates(eps, i_plus, i_minus);

  const double ns = static_cast<double>(c.samples);
  DeviationSeries out;
  out.eps = eps;
  out.tail_certified = ld.C_certified;
  std::int64_t hits = 0;
  double lw = 0.0;
  CompensatedSum lw_sum;
  for (std::size_t n = 1; n <= c.n_max; ++n) {
    const std::size_t idx = c.index(e, n);
    const LambdaEstimate est = estimate_from(c.plus[idx], c.minus[idx], c.samples);
    out.per_n.push_back({n, est.plus, est.minus, est.stderr_plus, est.stderr_minus});
    hits += c.plus[idx] + c.minus[idx];
    lw_sum.add(static_cast<double>(c.plus[idx] + c.minus[idx]) / static_cast<double>(n));
    const double partial = static_cast<double>(hits) / ns;
    const double tail = ld_tail(ld, i_plus, i_minus, n);
    if (tail <= tail_rel_tol * partial || tail == 0.0) {
      out.truncation_n = n;
      out.tail_remainder = tail;
      out.value = partial;
      lw = lw_sum.value() / ns;
      out.log_weighted = lw;
      const double var = static_cast<double>(c.cum_sq[idx]) / ns - partial * partial;
      out.stderr = std::sqrt(std::max(0.0, var) / ns);
      const double lw_var = c.lw_sq[idx] / ns - lw * lw;
      out.log_weighted_stderr = std::sqrt(std::max(0.0, lw_var) / ns);
      return out;
    }
  }
  throw TailCertificationError("n_max = " + std::to_string(c.n_max) +
                               " is too small to certify the tail at eps = " +
                               format_double(eps) + " (remainder bound " +
                               format_double(ld_tail(ld, i_plus, i_minus, c.n_max)) + ")");
}

VarianceEstimate sigma2_batch_means(const EnsembleCounts& c, std::size_t n) {
  const auto it = std::find(c.checkpoints.begin(), c.checkpoints.end(), n);
  if (it == c.checkpoints.end()) {
    throw std::invalid_argument("sigma2_batch_means: n = " + std::to_string(n) +
                                " is not a checkpoint of this ensemble");
  }
  const std::vector<double> y =
      finite_only(c.checkpoint_values[static_cast<std::size_t>(it - c.checkpoints.begin())]);
  VarianceEstimate out;
  out.method = VarianceEstimate::Method::BatchMeans;
  out.n_used = n;
  if (y.size() < 2) return out;
  const double mu = mean_of(y);
  std::vector<double> d2(y.size());
  std::vector<double> d4(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - mu;
    d2[i] = d * d;
    d4[i] = d2[i] * d2[i];
  }
  const double m = static_cast<double>(y.size());
  const double s2 = pairwise_sum(d2) / (m - 1.0);
  const double m4 = pairwise_sum(d4) / m;
  out.sigma2 = s2;
  out.stderr = std::sqrt(std::max(0.0, m4 - s2 * s2) / m);
  return out;
}

VarianceEstimate sigma2_autocovariance(const EnsembleCounts& c) {
  const std::size_t L = c.autocov_lags;
  if (L == 0) throw std::invalid_argument("sigma2_autocovariance: ensemble has no lag data");
  std::vector<double> C(L + 1);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < c.samples; ++i) {
    if (std::isfinite(c.autocov[i * (L + 1)])) rows.push_back(i);
  }
  VarianceEstimate out;
  out.method = VarianceEstimate::Method::Autocovariance;
  out.n_used = c.n_max;
  if (rows.size() < 2) return out;
  std::vector<double> col(rows.size());
  for (std::size_t k = 0; k <= L; ++k) {
    for (std::size_t j = 0; j < rows.size(); ++j) col[j] = c.autocov[rows[j] * (L + 1) + k];
    C[k] = mean_of(col);
  }
  if (C[0] <= 0.0) return out;
  // Self-consistent window: the smallest M with M >= 10 tau_int(M).
  std::size_t M = L;
  double tau = 0.5;
  for (std::size_t k = 1; k <= L; ++k) {
    tau += C[k] / C[0];
    if (static_cast<double>(k) >= 10.0 * tau) {
      M = k;
      break;
    }
  }
  if (M == L) out.warning = "lag window reached the maximum lag without self-consistency";
  std::vector<double> g(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const double* row = c.autocov.data() + rows[j] * (L + 1);
    double v = row[0];
    for (std::size_t k = 1; k <= M; ++k) v += 2.0 * row[k];
    g[j] = v;
  }
  const double mu = mean_of(g);
  std::vector<double> d2(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) d2[j] = (g[j] - mu) * (g[j] - mu);
  const double m = static_cast<double>(g.size());
  out.sigma2 = mu;
  out.stderr = std::sqrt(pairwise_sum(d2) / (m - 1.0) / m);
  out.lag_cutoff = M;
  if (out.sigma2 < -3.0 * out.stderr) {
    out.warning = "negative autocovariance sum beyond noise; methods disagree";
  }
  return out;
}

double ks_statistic(std::vector<double> values) {
  values = finite_only(values);
  if (values.empty()) return 1.0;
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = gaussian::phi_cdf(values[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return std::min(1.0, d);
}

KSReport ks_from_ensemble(const EnsembleCounts& c, std::size_t n, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("ks_from_ensemble: sigma must be positive");
  const auto it = std::find(c.checkpoints.begin(), c.checkpoints.end(), n);
  if (it == c.checkpoints.end()) {
    throw std::invalid_argument("ks_from_ensemble: n is not a checkpoint of this ensemble");
  }
  std::vector<double> z = c.checkpoint_values[static_cast<std::size_t>(it - c.checkpoints.begin())];
  for (double& v : z) v /= sigma;
  return {n, ks_statistic(std::move(z))};
}

LambdaEstimate estimate_lambda_n(const ExperimentConfig& config, std::size_t n, double eps) {
  if (n < 1) throw std::invalid_argument("estimate_lambda_n: n must be >= 1");
  ExperimentConfig cfg = config;
  cfg.n_max = n;
  cfg.eps_grid = {eps};
  cfg.checkpoints.clear();
  cfg.levy_channel = false;
  cfg.levy_eps_grid.clear();
  cfg.autocov_lags = 0;
  return lambda_at(run_ensemble(cfg), 0, n);
}

DeviationSeries lambda_series(const ExperimentConfig& config, double eps) {
  ExperimentConfig cfg = config;
  cfg.eps_grid = {eps};
  cfg.checkpoints.clear();
  cfg.levy_channel = false;
  cfg.levy_eps_grid.clear();
  cfg.autocov_lags = 0;
  LdParams ld = config.ld;
  if (!ld.rate) ld = default_ld_params(cfg);
  return build_series(run_ensemble(cfg), 0, ld, cfg.tail_rel_tol);
}

VarianceEstimate estimate_sigma2(const ExperimentConfig& config, std::size_t n_cal) {
  ExperimentConfig cfg = config;
  cfg.n_max = n_cal;
  cfg.checkpoints = {n_cal};
  cfg.levy_channel = false;
  cfg.levy_eps_grid.clear();
  if (cfg.autocov_lags > 0 && n_cal <= cfg.autocov_burn_in + 2 * cfg.autocov_lags) {
    cfg.autocov_lags = 0;
  }
  return sigma2_batch_means(run_ensemble(cfg), n_cal);
}

KSReport ks_distance(const ExperimentConfig& config, std::size_t n, double sigma) {
  ExperimentConfig cfg = config;
  cfg.n_max = n;
  cfg.checkpoints = {n};
  cfg.levy_channel = false;
  cfg.levy_eps_grid.clear();
  cfg.autocov_lags = 0;
  return ks_from_ensemble(run_ensemble(cfg), n, sigma);
}

HeydeEstimate heyde_limit_estimate(const std::vector<SeriesPoint>& points) {
  if (points.empty()) throw ConfigError("heyde_limit_estimate: no grid points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].eps < points[i - 1].eps)) {
      throw ConfigError("heyde_limit_estimate: eps grid must be strictly decreasing");
    }
  }
  HeydeEstimate out;
  for (const auto& p : points) {
    out.eps.push_back(p.eps);
    out.scaled.push_back(p.eps * p.eps * p.value);
    out.scaled_stderr.push_back(p.eps * p.eps * p.stderr);
  }
  out.raw_smallest = out.scaled.back();
  const std::size_t k = std::min<std::size_t>(3, points.size());
  const std::size_t first = points.size() - k;
  if (k == 1) {
    out.limit = out.raw_smallest;
    out.limit_stderr = out.scaled_stderr.back();
    return out;
  }
  // Ordinary least squares for a + b eps; a = sum_j w_j y_j.
  double xbar = 0.0;
  for (std::size_t j = first; j < points.size(); ++j) xbar += out.eps[j];
  xbar /= static_cast<double>(k);
  double sxx = 0.0;
  for (std::size_t j = first; j < points.size(); ++j) sxx += (out.eps[j] - xbar) * (out.eps[j] - xbar);
  double a = 0.0;
  double b = 0.0;
  double var_a = 0.0;
  for (std::size_t j = first; j < points.size(); ++j) {
    const double dx = out.eps[j] - xbar;
    const double wb = dx / sxx;
    const double wa = 1.0 / static_cast<double>(k) - xbar * wb;
    a += wa * out.scaled[j];
    b += wb * out.scaled[j];
    var_a += wa * wa * out.scaled_stderr[j] * out.scaled_stderr[j];
  }
  out.limit = a;
  out.slope = b;
  out.limit_stderr = std::sqrt(var_a);
  double ubar = 0.0;
  for (std::size_t j = first; j < points.size(); ++j) ubar += out.eps[j] * out.eps[j];
  ubar /= static_cast<double>(k);
  double suu = 0.0;
  double suy = 0.0;
  double ybar = 0.0;
  for (std::size_t j = first; j < points.size(); ++j) ybar += out.scaled[j];
  ybar /= static_cast<double>(k);
  for (std::size_t j = first; j < points.size(); ++j) {
    const double du = out.eps[j] * out.eps[j] - ubar;
    suu += du * du;
    suy += du * (out.scaled[j] - ybar);
  }
  out.limit_quadratic = ybar - (suy / suu) * ubar;
  return out;
}

SpataruEstimate spataru_limit_estimate(const std::vector<SeriesPoint>& points) {
  if (points.empty()) throw ConfigError("spataru_limit_estimate: no grid points");
  SpataruEstimate out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && !(points[i].eps < points[i - 1].eps)) {
      throw ConfigError("spataru_limit_estimate: eps grid must be strictly decreasing");
    }
    if (!(points[i].eps < 1.0)) throw ConfigError("spataru_limit_estimate: eps must be < 1");
    const double norm = -std::log(points[i].eps);
    out.eps.push_back(points[i].eps);
    out.normalized.push_back(points[i].log_weighted / norm);
    out.normalized_stderr.push_back(points[i].log_weighted_stderr / norm);
  }
  out.monotone_toward_target = true;
  for (std::size_t i = 1; i < out.normalized.size(); ++i) {
    if (!(std::fabs(out.normalized[i] - out.target) < std::fabs(out.normalized[i - 1] - out.target))) {
      out.monotone_toward_target = false;
    }
  }
  return out;
}

double bernoulli_rate(double eps) {
  const double e = std::fabs(eps);
  if (e >= 0.5) return std::numeric_limits<double>::infinity();
  return (0.5 + e) * std::log1p(2.0 * e) + (0.5 - e) * std::log1p(-2.0 * e);
}

double gaussian_rate(double eps, double sigma) { return eps * eps / (2.0 * sigma * sigma); }

LambdaEstimate bernoulli_lambda_n(std::size_t n, double eps) {
  const double dn = static_cast<double>(n);
  // The same double predicate as the kernel: S = k - n/2 is exact.
  std::optional<std::size_t> k_plus;
  std::optional<std::size_t> k_minus;
  for (std::size_t k = 0; k <= n; ++k) {
    const double dev = (static_cast<double>(k) - 0.5 * dn) / dn - 0.0;
    if (dev <= -eps) k_minus = k;
    if (!k_plus && dev >= eps) k_plus = k;
  }
  const boost::math::binomial_distribution<double> bin(dn, 0.5);
  LambdaEstimate out;
  if (k_plus) {
    out.plus = *k_plus == 0 ? 1.0
                            : boost::math::cdf(boost::math::complement(
                                  bin, static_cast<double>(*k_plus - 1)));
  }
  if (k_minus) out.minus = boost::math::cdf(bin, static_cast<double>(*k_minus));
  return out;
}

LambdaEstimate gaussian_lambda_n(std::size_t n, double eps, double sigma) {
  const double p = gaussian::phi_cdf(-eps * std::sqrt(static_cast<double>(n)) / sigma);
  return {p, p, 0.0, 0.0};
}

SeriesPoint bernoulli_series(double eps, double tail_rel_tol) {
  const double rate = bernoulli_rate(eps);
  check_rates(eps, rate, rate);
  LdParams ld;
  ld.C = 1.0;
  CompensatedSum value;
  CompensatedSum lw;
  for (std::size_t n = 1;; ++n) {
    const LambdaEstimate l = bernoulli_lambda_n(n, eps);
    value.add(l.plus + l.minus);
    lw.add((l.plus + l.minus) / static_cast<double>(n));
    const double tail = ld_tail(ld, rate, rate, n);
    if (tail <= tail_rel_tol * value.value()) {
      return {eps, value.value(), 0.0, lw.value(), 0.0};
    }
    if (n > 100000000) throw TailCertificationError("bernoulli_series: no convergence");
  }
}

SeriesPoint gaussian_series(double eps, double sigma) {
  const auto rep = gaussian::heyde_gaussian_sum(eps / sigma);
  const double lw = gaussian::log_weighted_gaussian_sum(eps, sigma);
  return {eps, 2.0 * (rep.value - 0.5), 0.0, 2.0 * lw, 0.0};
}

LdParams default_ld_params(const ExperimentConfig& config) {
  LdParams ld = config.ld;
  const auto infinite = [](double e) {
    return e == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  if (config.source == SourceKind::IidBernoulli) {
    ld.rate = bernoulli_rate;
    ld.C = 1.0;
    ld.C_certified = true;
    return ld;
  }
  if (config.source == SourceKind::IidGaussian) {
    ld.rate = [](double e) { return gaussian_rate(e, 1.0); };
    ld.C = 1.0;
    ld.C_certified = true;
    return ld;
  }
  if (config.observable_id == "zero" || config.observable_id.rfind("constant:", 0) == 0) {
    // S_n/n - mean vanishes identically once centered by the constant itself.
    ld.rate = infinite;
    ld.C_certified = true;
    return ld;
  }
  if (config.map_id == "binary" && config.observable_id == "centered_bit" &&
      config.mean.value_or(0.0) == 0.0) {
    ld.rate = bernoulli_rate;
    ld.C = 1.0;
    ld.C_certified = true;
    return ld;
  }
  ld.rate = nullptr;
  return ld;
}

}  // namespace birkhoff::stats

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "birkhoff/cli/app.hpp"
#include "birkhoff/continued_fraction.hpp"
#include "birkhoff/deviation_stats.hpp"
#include "birkhoff/errors.hpp"
#include "birkhoff/exact.hpp"
#include "birkhoff/gaussian.hpp"
#include "birkhoff/numeric.hpp"
#include "birkhoff/thermo.hpp"

namespace birkhoff::cli {
namespace {

const char* kLambdaHeader = "eps,n,lambda_plus,lambda_minus,stderr_plus,stderr_minus\n";

// JSON cannot hold inf/nan; keep them readable rather than silently null.
Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

void csv_row(std::ostringstream& os, double eps, std::size_t n, const stats::LambdaEstimate& l) {
  os << format_double(eps) << ',' << n << ',' << format_double(l.plus) << ','
     << format_double(l.minus) << ',' << format_double(l.stderr_plus) << ','
     << format_double(l.stderr_minus) << '\n';
}

thermo::SolverConfig solver_config(const Json& j) {
  thermo::SolverConfig s;
  if (j.contains("degree")) s.degree = j["degree"].get<int>();
  if (j.contains("k_max")) s.k_max = j["k_max"].get<std::size_t>();
  if (j.contains("tail_correction")) s.tail_correction = j["tail_correction"].get<bool>();
  if (j.contains("k_direct")) s.k_direct = j["k_direct"].get<std::size_t>();
  if (j.contains("beta_min")) s.beta_min = j["beta_min"].get<double>();
  if (j.contains("beta_max")) s.beta_max = j["beta_max"].get<double>();
  if (j.contains("derivative_step")) s.derivative_step = j["derivative_step"].get<double>();
  if (s.degree < 4) throw ConfigError("solver.degree must be at least 4");
  if (s.k_max < 1 || s.k_direct < 1) throw ConfigError("solver.k_max and k_direct must be positive");
  if (!(s.beta_min > 0.5) || !(s.beta_max > s.beta_min))
    throw ConfigError("solver beta window must satisfy 0.5 < beta_min < beta_max");
  if (!(s.derivative_step > 0.0)) throw ConfigError("solver.derivative_step must be positive");
  return s;
}

Json solver_json(const thermo::SolverConfig& s) {
  return Json{{"degree", s.degree},       {"k_max", s.k_max},
              {"tail_correction", s.tail_correction}, {"k_direct", s.k_direct},
              {"beta_min", s.beta_min},   {"beta_max", s.beta_max},
              {"derivative_step", s.derivative_step}};
}

std::vector<stats::SeriesPoint> to_points(const std::vector<stats::DeviationSeries>& series) {
  std::vector<stats::SeriesPoint> pts;
  for (const auto& s : series)
    pts.push_back({s.eps, s.value, s.stderr, s.log_weighted, s.log_weighted_stderr});
  return pts;
}

Json extrapolations(const std::vector<stats::SeriesPoint>& pts) {
  Json out = Json::object();
  const auto h = stats::heyde_limit_estimate(pts);
  Json heyde{{"eps", h.eps},
             {"scaled", Json::array()},
             {"scaled_stderr", Json::array()},
             {"raw_smallest", num(h.raw_smallest)},
             {"limit", num(h.limit)},
             {"slope", num(h.slope)},
             {"limit_stderr", num(h.limit_stderr)},
             {"limit_quadratic", num(h.limit_quadratic)}};
  for (std::size_t i = 0; i < h.scaled.size(); ++i) {
    heyde["scaled"].push_back(num(h.scaled[i]));
    heyde["scaled_stderr"].push_back(num(h.scaled_stderr[i]));
  }
  out["heyde"] = heyde;
  bool small_enough = true;
  for (const auto& p : pts) small_enough = small_enough && p.eps < 1.0;
  if (small_enough) {
    const auto s = stats::spataru_limit_estimate(pts);
    Json sp{{"eps", s.eps},
            {"normalized", Json::array()},
            {"normalized_stderr", Json::array()},
            {"target", s.target},
            {"monotone_toward_target", s.monotone_toward_target}};
    for (std::size_t i = 0; i < s.normalized.size(); ++i) {
      sp["normalized"].push_back(num(s.normalized[i]));
      sp["normalized_stderr"].push_back(num(s.normalized_stderr[i]));
    }
    out["log_weighted"] = sp;
  }
  return out;
}

// Shared Monte Carlo pipeline for `asymptotics` and `iid-baseline --mode monte-carlo`.
RunPayload ensemble_run(const stats::ExperimentConfig& ec, const stats::LdParams& ld,
                        const std::string& label) {
  ec.validate();
  const stats::EnsembleCounts counts = stats::run_ensemble(ec);

  RunPayload payload;
  std::ostringstream csv;
  csv << kLambdaHeader;
  for (std::size_t e = 0; e < counts.eps.size(); ++e) {
    for (std::size_t n = 1; n <= counts.n_max; ++n) {
      const auto l = stats::lambda_at(counts, e, n);
      csv_row(csv, counts.eps[e], n, l);
    }
  }
  payload.artifacts["lambda.csv"] = csv.str();

  Json summary{{"subcommand", label},
               {"samples", counts.samples},
               {"n_max", counts.n_max},
               {"mean", num(counts.mean)},
               {"terminated", counts.terminated},
               {"tail_certified", ld.C_certified},
               {"ld", {{"C", ld.C}, {"delta", ld.delta}, {"M", ld.M}}}};

  std::vector<stats::DeviationSeries> series;
  Json series_json = Json::array();
  for (std::size_t e = 0; e < counts.eps.size(); ++e) {
    series.push_back(stats::build_series(counts, e, ld, ec.tail_rel_tol));
    const auto& s = series.back();
    series_json.push_back({{"eps", s.eps},
                           {"value", num(s.value)},
                           {"stderr", num(s.stderr)},
                           {"truncation_n", s.truncation_n},
                           {"tail_remainder", num(s.tail_remainder)},
                           {"tail_certified", s.tail_certified},
                           {"rate_plus", num(ld.rate(s.eps))},
                           {"rate_minus", num(ld.rate(-s.eps))},
                           {"log_weighted", num(s.log_weighted)},
                           {"log_weighted_stderr", num(s.log_weighted_stderr)}});
  }
  summary["series"] = series_json;
  summary["extrapolation"] = extrapolations(to_points(series));

  Json sigma = Json::array();
  Json ks = Json::array();
  double sigma_ref = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t n : counts.checkpoints) {
    const auto v = stats::sigma2_batch_means(counts, n);
    sigma.push_back({{"method", "batch_means"},
                     {"n", n},
                     {"sigma2", num(v.sigma2)},
                     {"stderr", num(v.stderr)},
                     {"warning", v.warning}});
    sigma_ref = v.sigma2;
  }
  if (counts.autocov_lags > 0) {
    const auto v = stats::sigma2_autocovariance(counts);
    sigma.push_back({{"method", "autocovariance"},
                     {"n", v.n_used},
                     {"sigma2", num(v.sigma2)},
                     {"stderr", num(v.stderr)},
                     {"lag_cutoff", v.lag_cutoff},
                     {"warning", v.warning}});
  }
  if (std::isfinite(sigma_ref) && sigma_ref > 0.0) {
    for (std::size_t n : counts.checkpoints) {
      const auto r = stats::ks_from_ensemble(counts, n, std::sqrt(sigma_ref));
      ks.push_back({{"n", r.n}, {"delta_n", num(r.delta_n)}});
    }
  }
  summary["sigma2"] = sigma;
  summary["ks"] = ks;

  if (!counts.levy_eps.empty()) {
    std::ostringstream lcsv;
    lcsv << "eps,n,gamma_plus,gamma_minus,stderr_plus,stderr_minus\n";
    for (std::size_t e = 0; e < counts.levy_eps.size(); ++e) {
      for (std::size_t n = 1; n <= counts.n_max; ++n) {
        const auto l = stats::levy_lambda_at(counts, e, n);
        csv_row(lcsv, counts.levy_eps[e], n, l);
      }
    }
    payload.artifacts["levy.csv"] = lcsv.str();

    // Gamma_n(eps/2) against Lambda_n(eps): |log|(G^n)'x| - 2 log q_n| <= 2 log 2.
    Json cmp = Json::array();
    const std::size_t pairs = std::min(counts.levy_eps.size(), counts.eps.size());
    for (std::size_t n : counts.checkpoints) {
      for (std::size_t e = 0; e < pairs; ++e) {
        const auto g = stats::levy_lambda_at(counts, e, n);
        const auto l = stats::lambda_at(counts, e, n);
        const double diff = (g.plus + g.minus) - (l.plus + l.minus);
        const double se = std::hypot(std::hypot(g.stderr_plus, g.stderr_minus),
                                     std::hypot(l.stderr_plus, l.stderr_minus));
        cmp.push_back({{"n", n},
                       {"levy_eps", counts.levy_eps[e]},
                       {"eps", counts.eps[e]},
                       {"gamma", num(g.plus + g.minus)},
                       {"lambda", num(l.plus + l.minus)},
                       {"z", num(se > 0.0 ? diff / se : 0.0)}});
      }
    }
    summary["levy_comparison"] = cmp;
  }
  payload.summary = summary;
  return payload;
}

std::vector<double> doubles(const Json& j) { return j.get<std::vector<double>>(); }

RunPayload run_asymptotics(const Json& v) {
  stats::ExperimentConfig ec;
  ec.map_id = v["map"].get<std::string>();
  ec.observable_id = v["observable"].get<std::string>();
  ec.source = stats::source_from_string(v["source"].get<std::string>());
  if (!v["mean"].is_null()) ec.mean = v["mean"].get<double>();
  ec.eps_grid = doubles(v["eps_grid"]);
  ec.n_max = v["n_max"].get<std::size_t>();
  ec.samples = v["samples"].get<std::size_t>();
  ec.seed = v["seed"].get<std::uint64_t>();
  const Json& ld = v["ld"];
  if (ld.contains("C")) ec.ld.C = ld["C"].get<double>();
  if (ld.contains("delta")) ec.ld.delta = ld["delta"].get<double>();
  if (ld.contains("M")) ec.ld.M = ld["M"].get<double>();
  if (ld.contains("C_certified")) ec.ld.C_certified = ld["C_certified"].get<bool>();
  ec.tail_rel_tol = v["tail_rel_tol"].get<double>();
  ec.checkpoints = v["checkpoints"].get<std::vector<std::size_t>>();
  ec.levy_channel = v["levy_channel"].get<bool>();
  ec.levy_eps_grid = doubles(v["levy_eps_grid"]);
  ec.autocov_lags = v["autocov_lags"].get<std::size_t>();
  ec.autocov_burn_in = v["autocov_burn_in"].get<std::size_t>();
  ec.validate();

  stats::LdParams ld_params = stats::default_ld_params(ec);
  const thermo::SolverConfig scfg = solver_config(v["solver"]);
  if (!ld_params.rate && ec.source == stats::SourceKind::Map && ec.map_id == "gauss" &&
      ec.observable_id == "log_derivative") {
    auto solver = std::make_shared<const thermo::PressureSolver>(scfg);
    ld_params.rate = [solver](double eps) { return solver->rate_function(eps); };
  }
  if (!ld_params.rate) {
    throw TailCertificationError("no large-deviation rate is known for observable '" +
                                 ec.observable_id + "' on map '" + ec.map_id + "'");
  }
  RunPayload p = ensemble_run(ec, ld_params, "asymptotics");
  p.summary["map"] = ec.map_id;
  p.summary["observable"] = ec.observable_id;
  p.summary["source"] = stats::to_string(ec.source);
  return p;
}

RunPayload run_iid_baseline(const Json& v) {
  const std::string dist = v["dist"].get<std::string>();
  const std::string mode = v["mode"].get<std::string>();
  if (dist != "gaussian" && dist != "bernoulli")
    throw ConfigError("dist must be 'gaussian' or 'bernoulli', got '" + dist + "'");
  if (mode != "exact" && mode != "monte-carlo")
    throw ConfigError("mode must be 'exact' or 'monte-carlo', got '" + mode + "'");
  const double sigma = v["sigma"].get<double>();
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const std::vector<double> eps = doubles(v["eps_grid"]);
  const std::size_t n_max = v["n_max"].get<std::size_t>();
  const double tol = v["tail_rel_tol"].get<double>();
  const double target = dist == "gaussian" ? sigma * sigma : 0.25;

  if (mode == "monte-carlo") {
    if (dist == "gaussian" && sigma != 1.0)
      throw ConfigError("monte-carlo mode samples standard normals; sigma must be 1");
    stats::ExperimentConfig ec;
    ec.source = dist == "gaussian" ? stats::SourceKind::IidGaussian : stats::SourceKind::IidBernoulli;
    ec.observable_id = "none";
    ec.map_id = "none";
    ec.eps_grid = eps;
    ec.n_max = n_max;
    ec.samples = v["samples"].get<std::size_t>();
    ec.seed = v["seed"].get<std::uint64_t>();
    ec.tail_rel_tol = tol;
    ec.checkpoints = v["checkpoints"].get<std::vector<std::size_t>>();
    RunPayload p = ensemble_run(ec, stats::default_ld_params(ec), "iid-baseline");
    p.summary["dist"] = dist;
    p.summary["mode"] = mode;
    p.summary["sigma2_target"] = target;
    return p;
  }

  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || (i > 0 && !(eps[i] < eps[i - 1])))
      throw ConfigError("eps_grid must be positive and strictly decreasing");
    if (dist == "bernoulli" && !(eps[i] < 0.5))
      throw ConfigError("bernoulli deviations need eps < 1/2");
  }
  if (eps.empty()) throw ConfigError("eps_grid is empty");
  if (n_max < 1) throw ConfigError("n_max must be at least 1");

  RunPayload payload;
  std::ostringstream csv;
  csv << kLambdaHeader;
  std::vector<stats::SeriesPoint> pts;
  Json series = Json::array();
  for (double e : eps) {
    for (std::size_t n = 1; n <= n_max; ++n) {
      const auto l = dist == "gaussian" ? stats::gaussian_lambda_n(n, e, sigma)
                                        : stats::bernoulli_lambda_n(n, e);
      csv_row(csv, e, n, l);
    }
    const auto p = dist == "gaussian" ? stats::gaussian_series(e, sigma)
                                      : stats::bernoulli_series(e, tol);
    pts.push_back(p);
    series.push_back({{"eps", e}, {"value", num(p.value)}, {"log_weighted", num(p.log_weighted)}});
  }
  payload.artifacts["lambda.csv"] = csv.str();
  payload.summary = Json{{"subcommand", "iid-baseline"},
                         {"dist", dist},
                         {"mode", mode},
                         {"sigma2_target", target},
                         {"series", series},
                         {"extrapolation", extrapolations(pts)}};
  return payload;
}

RunPayload run_pressure(const Json& v) {
  const thermo::SolverConfig scfg = solver_config(v["solver"]);
  const thermo::PressureSolver solver(scfg);
  const std::vector<double> betas = doubles(v["beta_grid"]);
  const std::vector<double> alphas = doubles(v["alpha_grid"]);

  RunPayload payload;
  const auto table = solver.table(betas);
  std::ostringstream pcsv;
  pcsv << "beta,P,P1,P2\n";
  for (std::size_t i = 0; i < table.beta.size(); ++i) {
    pcsv << format_double(table.beta[i]) << ',' << format_double(table.P[i]) << ','
         << format_double(table.P1[i]) << ',' << format_double(table.P2[i]) << '\n';
  }
  payload.artifacts["pressure.csv"] = pcsv.str();

  std::ostringstream scsv;
  scsv << "alpha,beta,b,I\n";
  for (double a : alphas) {
    const auto sp = solver.spectrum_b(a);
    scsv << format_double(a) << ',' << format_double(sp.beta_of_alpha) << ','
         << format_double(sp.b) << ',' << format_double(a * (1.0 - sp.b)) << '\n';
  }
  payload.artifacts["spectrum.csv"] = scsv.str();

  const auto diag = solver.pressure(1.0);
  const auto d1 = solver.derivatives(1.0);
  const auto window = solver.alpha_window();
  const auto second = solver.rate_second_derivative_at_0();
  payload.summary = Json{
      {"subcommand", "pressure"},
      {"solver", solver_json(scfg)},
      {"P_at_1", num(diag.P)},
      {"P_at_1_refined", num(diag.refined_P)},
      {"minus_P1_at_1", num(-d1.P1)},
      {"two_gamma", kTwoLevy},
      {"P2_at_1", num(d1.P2)},
      {"spectral_gap", num(diag.spectral_gap)},
      {"gauss_density_residual", num(solver.gauss_density_residual())},
      {"alpha_window", {num(window.first), num(window.second)}},
      {"b_at_two_gamma", num(solver.spectrum_b(kTwoLevy).b)},
      {"rate",
       {{"I_at_0", num(solver.rate_function(0.0))},
        {"I1_at_0", num(solver.rate_first_derivative_at_0())},
        {"I2_at_0_direct", num(second.direct)},
        {"I2_at_0_closed_form", num(second.closed_form)},
        {"relative_difference", num(second.relative_difference)}}}};
  return payload;
}

Json digit_json(const mpz_class& a) {
  if (a.fits_ulong_p()) return Json(static_cast<std::uint64_t>(a.get_ui()));
  return a.get_str();
}

RunPayload run_cf(const Json& v) {
  const std::string input = v["input"].get<std::string>();
  const std::size_t n = v["digits"].get<std::size_t>();
  const auto bits = v["precision"].get<unsigned>();
  if (n < 1) throw ConfigError("digits must be at least 1");

  cf::CFExpansion exp;
  if (cf::is_named_constant(input)) {
    if (bits < 16) throw ConfigError("precision must be at least 16 bits");
    exp = cf::cf_digits(cf::named_constant(input, bits), n);
  } else {
    mpq_class x;
    try {
      x = parse_rational(input);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("cannot parse cf input '" + input +
                        "' (expected p/q, a decimal, or a named constant)");
    }
    if (x <= 0 || x >= 1) throw ConfigError("cf input must lie strictly between 0 and 1");
    exp = cf::cf_digits(x, n);
  }
  const auto conv = cf::convergents(exp, exp.digits.size());

  std::ostringstream lines;
  Json digits = Json::array();
  Json fractions = Json::array();
  for (std::size_t k = 0; k < conv.size(); ++k) {
    const Json row{{"index", conv[k].index},
                   {"digit", digit_json(exp.digits[k])},
                   {"p", conv[k].p.get_str()},
                   {"q", conv[k].q.get_str()}};
    lines << row.dump() << '\n';
    digits.push_back(digit_json(exp.digits[k]));
    fractions.push_back(conv[k].p.get_str() + "/" + conv[k].q.get_str());
  }
  Json summary{{"input", input},
               {"source", exp.source == cf::DigitSource::Rational ? "rational" : "interval"},
               {"requested", n},
               {"digits", digits},
               {"convergents", fractions},
               {"terminated", exp.terminated}};
  if (exp.source == cf::DigitSource::Interval) summary["precision"] = bits;
  lines << summary.dump() << '\n';

  RunPayload payload;
  payload.summary = summary;
  payload.artifacts["cf.jsonl"] = lines.str();
  return payload;
}

RunPayload run_gaussian(const Json& v) {
  const double rho = v["rho"].get<double>();
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive");
  const auto rep = gaussian::heyde_gaussian_sum(rho);
  Json summary{{"subcommand", "gaussian"},
               {"rho", rho},
               {"value", num(rep.value)},
               {"scaled", num(rep.scaled)},
               {"truncation_n", rep.truncation_n},
               {"tail_bound", num(rep.tail_bound)},
               {"scaled_bounds", {0.5, 0.5 + rho * rho}}};
  if (!v["tail_k"].is_null()) {
    const double k = v["tail_k"].get<double>();
    if (!(k > 0.0)) throw ConfigError("tail_k must be positive");
    summary["tail"] = {{"k", k},
                       {"value", num(gaussian::tail_gaussian_sum(rho, k))},
                       {"limit", num(gaussian::tail_gaussian_limit(k))}};
  }
  if (!v["lw_eps"].is_null()) {
    const double eps = v["lw_eps"].get<double>();
    const double sigma = v["sigma"].get<double>();
    if (!(eps > 0.0) || !(sigma > 0.0)) throw ConfigError("lw_eps and sigma must be positive");
    const auto lw = gaussian::log_weighted_gaussian_sum_report(eps, sigma);
    summary["log_weighted"] = {{"eps", eps},
                               {"sigma", sigma},
                               {"value", num(lw.value)},
                               {"tail_bound", num(lw.tail_bound)},
                               {"normalized", num(lw.value / -std::log(eps))}};
  }
  RunPayload payload;
  payload.summary = summary;
  payload.artifacts["gaussian.json"] = summary.dump(2) + "\n";
  return payload;
}

}  // namespace

RunPayload execute(const RunConfig& config) {
  const Json& v = config.values;
  const std::string& sub = config.subcommand;
  if (sub == "asymptotics") return run_asymptotics(v);
  if (sub == "iid-baseline") return run_iid_baseline(v);
  if (sub == "pressure") return run_pressure(v);
  if (sub == "cf") return run_cf(v);
  if (sub == "gaussian") return run_gaussian(v);
  throw ConfigError("unknown subcommand '" + sub + "'");
}

}  // namespace birkhoff::cli

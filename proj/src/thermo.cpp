#include "birkhoff/thermo.hpp"

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <omp.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "birkhoff/errors.hpp"
#include "birkhoff/numeric.hpp"

namespace birkhoff::thermo {

namespace {

constexpr int kMomentTerms = 24;
constexpr int kBernoulliTerms = 7;

// Hurwitz zeta sum_{k>=0} (a + k)^(-s) for s > 1 and a >= ~100, by
// Euler-Maclaurin with the expansion point a itself.
double hurwitz_zeta_large_a(double s, double a) {
  const double a_s = std::pow(a, -s);
  double total = a * a_s / (s - 1.0) + 0.5 * a_s;
  double rising = s;  // s (s+1) ... (s + 2i - 2)
  double power = a_s / a;
  for (int i = 1; i <= kBernoulliTerms; ++i) {
    const double term = boost::math::bernoulli_b2n<double>(i) /
                        boost::math::factorial<double>(2 * i) * rising * power;
    total += term;
    rising *= (s + 2.0 * i - 1.0) * (s + 2.0 * i);
    power /= a * a;
  }
  return total;
}

// Taylor coefficients of T_m(2y - 1) around y = 0:
// c[m][j] = T_m^{(j)}(-1) 2^j / j!, with T_m^{(j)}(1) = prod_{i<j} (m^2 - i^2)/(2i + 1).
std::vector<std::vector<double>> chebyshev_taylor(int degree) {
  std::vector<std::vector<double>> c(degree + 1, std::vector<double>(kMomentTerms + 1, 0.0));
  for (int m = 0; m <= degree; ++m) {
    double d = 1.0;  // T_m^{(j)}(1) 2^j / j!
    for (int j = 0; j <= std::min(m, kMomentTerms); ++j) {
      const double sign = ((m + j) % 2 == 0) ? 1.0 : -1.0;
      c[m][j] = sign * d;
      d *= (static_cast<double>(m) * m - static_cast<double>(j) * j) / (2.0 * j + 1.0) * 2.0 /
           (j + 1.0);
    }
  }
  return c;
}

double lobatto_node(int j, int degree) {
  return 0.5 * (1.0 - std::cos(std::numbers::pi * j / degree));
}

// One row of the collocation matrix: node x, all basis functions.
void assemble_row(double beta, int degree, const SolverConfig& cfg,
                  const std::vector<std::vector<double>>& taylor, double x, double* row) {
  std::fill(row, row + degree + 1, 0.0);
  const std::size_t k_direct = std::min(cfg.k_direct, cfg.k_max);
  for (std::size_t k = 1; k <= k_direct; ++k) {
    const double u = static_cast<double>(k) + x;
    const double w = std::pow(u, -2.0 * beta);
    const double t = 2.0 / u - 1.0;
    double t0 = 1.0;
    double t1 = t;
    row[0] += w;
    if (degree >= 1) row[1] += w * t;
    for (int m = 2; m <= degree; ++m) {
      const double t2 = 2.0 * t * t1 - t0;
      row[m] += w * t2;
      t0 = t1;
      t1 = t2;
    }
  }
  if (cfg.k_max <= k_direct && !cfg.tail_correction) return;
  // Moments Z_j = sum_{k_direct < k <= k_max} (k+x)^(-2beta-j) (+ tail), combined
  // with the Taylor coefficients of each basis function at y = 0.
  std::vector<double> Z(kMomentTerms + 1, 0.0);
  const double a_lo = static_cast<double>(k_direct) + 1.0 + x;
  const double a_hi = static_cast<double>(cfg.k_max) + 1.0 + x;
  for (int j = 0; j <= kMomentTerms; ++j) {
    const double s = 2.0 * beta + j;
    double z = 0.0;
    if (cfg.k_max > k_direct) z = hurwitz_zeta_large_a(s, a_lo) - hurwitz_zeta_large_a(s, a_hi);
    if (cfg.tail_correction) {
      // midpoint integral for k > k_max: int_{K+1/2}^inf (s'+x)^(-s) ds'
      const double base = static_cast<double>(cfg.k_max) + 0.5 + x;
      z += std::pow(base, 1.0 - s) / (s - 1.0);
    }
    Z[j] = z;
  }
  for (int m = 0; m <= degree; ++m) {
    double acc = 0.0;
    for (int j = std::min(m, kMomentTerms); j >= 0; --j) acc += taylor[m][j] * Z[j];
    row[m] += acc;
  }
}

Eigen::MatrixXd basis_matrix(int degree) {
  Eigen::MatrixXd V(degree + 1, degree + 1);
  for (int j = 0; j <= degree; ++j) {
    const double theta = std::numbers::pi * j / degree;
    for (int m = 0; m <= degree; ++m) V(j, m) = std::cos(m * (std::numbers::pi - theta));
  }
  return V;
}

}  // namespace

PressureSolver::PressureSolver(SolverConfig config) : config_(config) {
  if (config_.degree < 4) throw ConfigError("collocation degree must be at least 4");
  if (config_.k_max < 1) throw ConfigError("branch truncation must be at least 1");
  if (!(config_.beta_min > 0.5) || !(config_.beta_max > config_.beta_min)) {
    throw ConfigError("beta window must satisfy 1/2 < beta_min < beta_max");
  }
  if (!(config_.derivative_step > 0.0)) throw ConfigError("derivative_step must be positive");
}

Eigen::MatrixXd PressureSolver::assemble_serial(double beta, int degree) const {
  const auto taylor = chebyshev_taylor(degree);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> A(degree + 1, degree + 1);
  for (int j = 0; j <= degree; ++j) {
    assemble_row(beta, degree, config_, taylor, lobatto_node(j, degree), A.row(j).data());
  }
  return A;
}

Eigen::MatrixXd PressureSolver::assemble(double beta, int degree) const {
  const auto taylor = chebyshev_taylor(degree);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> A(degree + 1, degree + 1);
#pragma omp parallel for schedule(static)
  for (int j = 0; j <= degree; ++j) {
    assemble_row(beta, degree, config_, taylor, lobatto_node(j, degree), A.row(j).data());
  }
  return A;
}

double PressureSolver::solve(double beta, int degree, PressureDiagnostics* diag) const {
  if (!(beta > 0.5) || !std::isfinite(beta)) {
    throw RangeError("pressure: beta must exceed 1/2 (the operator diverges there)", 0.5,
                     std::numeric_limits<double>::infinity());
  }
  // Each eigensolve stays on one thread; concurrency comes from distinct beta.
  const Eigen::MatrixXd A = assemble_serial(beta, degree);
  const Eigen::MatrixXd V = basis_matrix(degree);
  const Eigen::MatrixXd M = V.partialPivLu().solve(A);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) {
    throw SolverError("pressure: eigensolver did not converge at beta = " + format_double(beta));
  }
  const auto& ev = es.eigenvalues();
  Eigen::Index lead = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    if (ev[i].real() > ev[lead].real()) lead = i;
  }
  const double lambda = ev[lead].real();
  if (!(lambda > 0.0) || std::fabs(ev[lead].imag()) > 1e-10 * lambda) {
    throw SolverError("pressure: leading eigenvalue is not real and positive at beta = " +
                      format_double(beta));
  }
  if (diag) {
    double second = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (i != lead) second = std::max(second, std::abs(ev[i]));
    }
    diag->leading_eigenvalue = lambda;
    diag->spectral_gap = second / lambda;
  }
  return std::log(lambda);
}

double PressureSolver::P(double beta) const {
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    const auto it = cache_.find(beta);
    if (it != cache_.end()) return it->second;
  }
  const double value = solve(beta, config_.degree, nullptr);
  std::lock_guard<std::mutex> lock(cache_mutex_);
  cache_.emplace(beta, value);
  return value;
}

PressureDiagnostics PressureSolver::pressure(double beta) const {
  PressureDiagnostics d;
  d.P = solve(beta, config_.degree, &d);
  PressureDiagnostics fine;
  d.refined_P = solve(beta, config_.degree + 2, &fine);
  d.refinement_delta = std::fabs(d.P - d.refined_P);
  d.degree = config_.degree;
  d.k_max = config_.k_max;
  d.tail_correction = config_.tail_correction;
  if (d.refinement_delta > config_.refinement_tolerance) {
    throw SolverError("pressure: degree refinement changed P by " +
                      format_double(d.refinement_delta) + " at beta = " + format_double(beta));
  }
  return d;
}

Derivatives PressureSolver::derivatives(double beta) const {
  const double h = config_.derivative_step;
  const double p0 = P(beta);
  const double pp1 = P(beta + h), pm1 = P(beta - h);
  const double pp2 = P(beta + h / 2), pm2 = P(beta - h / 2);
  const double pp3 = P(beta + 2 * h), pm3 = P(beta - 2 * h);
  const double d_h = (pp1 - pm1) / (2 * h);
  const double d_h2 = (pp2 - pm2) / h;
  const double d_2h = (pp3 - pm3) / (4 * h);
  const double s_h = (pp1 - 2 * p0 + pm1) / (h * h);
  const double s_h2 = (pp2 - 2 * p0 + pm2) / (h * h / 4);
  const double s_2h = (pp3 - 2 * p0 + pm3) / (4 * h * h);
  Derivatives out;
  out.P1 = (4 * d_h2 - d_h) / 3;
  out.P2 = (4 * s_h2 - s_h) / 3;
  out.P1_coarse = (4 * d_h - d_2h) / 3;
  out.P2_coarse = (4 * s_h - s_2h) / 3;
  if (!(out.P2 > 0.0)) {
    throw ConvexityViolation("pressure second derivative " + format_double(out.P2) +
                             " is not positive at beta = " + format_double(beta));
  }
  return out;
}

std::pair<double, double> PressureSolver::alpha_window() const {
  return {-derivatives(config_.beta_max).P1, -derivatives(config_.beta_min).P1};
}

double PressureSolver::beta_of_alpha(double alpha) const {
  const double lo = config_.beta_min;
  const double hi = config_.beta_max;
  // g(beta) = P'(beta) + alpha is increasing; bracket first.
  const double g_lo = derivatives(lo).P1 + alpha;
  const double g_hi = derivatives(hi).P1 + alpha;
  if (!(g_lo <= 0.0 && g_hi >= 0.0)) {
    const double a_lo = alpha - g_hi;  // -P'(beta_max)
    const double a_hi = alpha - g_lo;  // -P'(beta_min)
    throw RangeError("beta_of_alpha: alpha = " + format_double(alpha) +
                         " lies outside the computable window [" + format_double(a_lo) + ", " +
                         format_double(a_hi) + "]",
                     a_lo, a_hi);
  }
  double a = lo, b = hi;
  // Start from the generic point when it is bracketed: beta(2 gamma) = 1.
  double beta = std::clamp(1.0, a, b);
  for (int iter = 0; iter < 100; ++iter) {
    const Derivatives d = derivatives(beta);
    const double g = d.P1 + alpha;
    if (std::fabs(g) < config_.root_tolerance) return beta;
    if (g < 0.0) a = beta; else b = beta;
    double next = beta - g / d.P2;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (b - a < 1e-15) return beta;
    beta = next;
  }
  throw SolverError("beta_of_alpha: root finding did not converge for alpha = " +
                    format_double(alpha));
}

SpectrumPoint PressureSolver::spectrum_b(double alpha) const {
  SpectrumPoint sp;
  sp.alpha = alpha;
  sp.beta_of_alpha = beta_of_alpha(alpha);
  sp.P = P(sp.beta_of_alpha);
  sp.b = (sp.P + alpha * sp.beta_of_alpha) / alpha;
  return sp;
}

double PressureSolver::rate_function(double eps) const {
  const double alpha = eps + kTwoLevy;
  const SpectrumPoint sp = spectrum_b(alpha);
  return alpha * (1.0 - sp.b);
}

double PressureSolver::rate_first_derivative_at_0() const {
  const double h = 1e-4;
  const double d1 = (rate_function(h) - rate_function(-h)) / (2 * h);
  const double d2 = (rate_function(h / 2) - rate_function(-h / 2)) / h;
  return (4 * d2 - d1) / 3;
}

RateSecondDerivative PressureSolver::rate_second_derivative_at_0() const {
  RateSecondDerivative out;
  const double h = 0.02;
  const double i0 = rate_function(0.0);
  const double s1 = (rate_function(h) - 2 * i0 + rate_function(-h)) / (h * h);
  const double s2 = (rate_function(h / 2) - 2 * i0 + rate_function(-h / 2)) / (h * h / 4);
  out.direct = (4 * s2 - s1) / 3;

  const double alpha = kTwoLevy;
  const double beta = beta_of_alpha(alpha);
  const double p = P(beta);
  const double beta_prime = -1.0 / derivatives(beta).P2;
  const double b2 = beta_prime / alpha + 2.0 * p / (alpha * alpha * alpha);
  out.closed_form = -2.0 * kLevy * b2;
  out.relative_difference = std::fabs(out.direct - out.closed_form) /
                            std::max(std::fabs(out.direct), std::fabs(out.closed_form));
  if (out.relative_difference > 0.05) {
    throw ConsistencyError("I''(0) routes disagree: direct " + format_double(out.direct) +
                           " vs closed form " + format_double(out.closed_form));
  }
  return out;
}

PressureTable PressureSolver::table_serial(const std::vector<double>& betas) const {
  PressureTable t;
  t.beta = betas;
  t.P.resize(betas.size());
  t.P1.resize(betas.size());
  t.P2.resize(betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    t.P[i] = P(betas[i]);
    const Derivatives d = derivatives(betas[i]);
    t.P1[i] = d.P1;
    t.P2[i] = d.P2;
  }
  t.degree = config_.degree;
  t.k_max = config_.k_max;
  t.tail_correction = config_.tail_correction;
  return t;
}

PressureTable PressureSolver::table(const std::vector<double>& betas) const {
  PressureTable t;
  t.beta = betas;
  t.P.resize(betas.size());
  t.P1.resize(betas.size());
  t.P2.resize(betas.size());
  const auto n = static_cast<std::int64_t>(betas.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      t.P[idx] = P(betas[idx]);
      const Derivatives d = derivatives(betas[idx]);
      t.P1[idx] = d.P1;
      t.P2[idx] = d.P2;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  t.degree = config_.degree;
  t.k_max = config_.k_max;
  t.tail_correction = config_.tail_correction;
  return t;
}

double PressureSolver::apply_operator(double beta, const std::function<double(double)>& g,
                                      double x) const {
  CompensatedSum sum;
  for (std::size_t k = config_.k_max; k >= 1; --k) {
    const double u = static_cast<double>(k) + x;
    sum.add(std::pow(u, -2.0 * beta) * g(1.0 / u));
  }
  if (config_.tail_correction) {
    // g(y) ~ g(0) + g'(0) y near 0; midpoint integrals of (s + x)^(-2beta-j).
    const double h = 1e-5;
    const double g0 = g(0.0);
    const double g1 = (-3.0 * g0 + 4.0 * g(h) - g(2 * h)) / (2 * h);
    const double base = static_cast<double>(config_.k_max) + 0.5 + x;
    const double s0 = 2.0 * beta;
    sum.add(g0 * std::pow(base, 1.0 - s0) / (s0 - 1.0));
    sum.add(g1 * std::pow(base, -s0) / s0);
  }
  return sum.value();
}

double PressureSolver::gauss_density_residual(std::size_t probes) const {
  const auto h = [](double x) { return 1.0 / ((1.0 + x) * std::numbers::ln2); };
  double worst = 0.0;
  for (std::size_t i = 0; i < probes; ++i) {
    const double x = probes == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(probes - 1);
    worst = std::max(worst, std::fabs(apply_operator(1.0, h, x) - h(x)));
  }
  return worst;
}

RateFunction::RateFunction(std::shared_ptr<const PressureSolver> solver)
    : solver_(std::move(solver)) {
  const auto [lo, hi] = solver_->alpha_window();
  domain_ = {lo - kTwoLevy, hi - kTwoLevy};
}

double RateFunction::second_deriv_at_0() const {
  std::call_once(second_once_, [this] { second_ = solver_->rate_second_derivative_at_0().direct; });
  return second_;
}

}  // namespace birkhoff::thermo

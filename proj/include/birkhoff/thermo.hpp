#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace birkhoff::thermo {

struct SolverConfig {
  int degree = 40;                  // Chebyshev collocation degree (degree + 1 Lobatto nodes)
  std::size_t k_max = 100000;       // branch truncation
  bool tail_correction = true;      // integral correction for k > k_max
  std::size_t k_direct = 400;       // branches evaluated one by one; the rest by moments
  double beta_min = 0.6;            // window for beta(alpha)
  double beta_max = 4.0;
  double derivative_step = 0.005;   // base step for Richardson differences
  double root_tolerance = 1e-10;    // |P'(beta) + alpha|
  double refinement_tolerance = 1e-8;
};

struct PressureDiagnostics {
  double P = 0.0;
  double refined_P = 0.0;         // at degree + 2
  double refinement_delta = 0.0;  // |P - refined_P|
  double leading_eigenvalue = 0.0;
  double spectral_gap = 0.0;      // |lambda_2| / lambda_1
  int degree = 0;
  std::size_t k_max = 0;
  bool tail_correction = true;
};

struct Derivatives {
  double P1 = 0.0;
  double P2 = 0.0;
  double P1_coarse = 0.0;  // Richardson value at twice the step, for consistency checks
  double P2_coarse = 0.0;
};

struct SpectrumPoint {
  double alpha = 0.0;
  double beta_of_alpha = 0.0;
  double b = 0.0;
  double P = 0.0;
};

struct PressureTable {
  std::vector<double> beta;
  std::vector<double> P;
  std::vector<double> P1;
  std::vector<double> P2;
  int degree = 0;
  std::size_t k_max = 0;
  bool tail_correction = true;
};

struct RateSecondDerivative {
  double direct = 0.0;       // second difference of I at 0
  double closed_form = 0.0;  // -2 gamma b''(2 gamma) via b'' = beta'/alpha + 2P/alpha^3
  double relative_difference = 0.0;
};

// The beta-weighted Gauss transfer operator
//   (L_beta g)(x) = sum_{k>=1} (k+x)^(-2 beta) g(1/(k+x))
// discretized by Chebyshev-Lobatto collocation on [0, 1]; P(beta) is the log
// of its leading eigenvalue. Thread-safe: the value cache is guarded.
class PressureSolver {
 public:
  explicit PressureSolver(SolverConfig config = {});

  const SolverConfig& config() const { return config_; }

  // Collocation matrix (nodes x basis) of L_beta applied to T_m(2x - 1). The
  // parallel kernel splits nodes across threads; the serial one is the reference.
  Eigen::MatrixXd assemble(double beta, int degree) const;
  Eigen::MatrixXd assemble_serial(double beta, int degree) const;

  // P at the configured degree (memoized).
  double P(double beta) const;
  // P with the degree-refinement check; throws SolverError on stagnation.
  PressureDiagnostics pressure(double beta) const;
  // Richardson-extrapolated central differences; throws ConvexityViolation if P2 <= 0.
  Derivatives derivatives(double beta) const;

  // Root of P'(beta) + alpha = 0 in [beta_min, beta_max]; throws RangeError
  // naming the reachable alpha window.
  double beta_of_alpha(double alpha) const;
  std::pair<double, double> alpha_window() const;

  SpectrumPoint spectrum_b(double alpha) const;
  // I(eps) = (eps + 2 gamma)(1 - b(eps + 2 gamma)).
  double rate_function(double eps) const;
  double rate_first_derivative_at_0() const;
  // Both routes; throws ConsistencyError when they differ by more than 5%.
  RateSecondDerivative rate_second_derivative_at_0() const;

  // P, P', P'' on a grid. Distinct beta values are solved concurrently.
  PressureTable table(const std::vector<double>& betas) const;
  PressureTable table_serial(const std::vector<double>& betas) const;

  // Direct (uncollocated) application of L_beta to g at x: explicit branch sum
  // to k_max plus the integral tail correction.
  double apply_operator(double beta, const std::function<double(double)>& g, double x) const;
  // max over a probe grid of |L_1 h - h| for the Gauss density h = 1/((1+x) log 2).
  double gauss_density_residual(std::size_t probes = 41) const;

 private:
  double solve(double beta, int degree, PressureDiagnostics* diag) const;

  SolverConfig config_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, double> cache_;
};

// I(eps) with its domain and curvature at 0, backed by a shared solver.
class RateFunction {
 public:
  explicit RateFunction(std::shared_ptr<const PressureSolver> solver);
  double operator()(double eps) const { return solver_->rate_function(eps); }
  std::pair<double, double> eps_domain() const { return domain_; }
  double second_deriv_at_0() const;

 private:
  std::shared_ptr<const PressureSolver> solver_;
  std::pair<double, double> domain_;
  mutable std::once_flag second_once_;
  mutable double second_ = 0.0;
};

}  // namespace birkhoff::thermo

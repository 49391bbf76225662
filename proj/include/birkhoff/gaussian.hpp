#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace birkhoff::gaussian {

// Standard normal distribution function. Absolute error below 1e-14.
double phi_cdf(double x);

// Standard normal density.
double phi_pdf(double x);

// Two-sided Mills-ratio bounds on the upper tail Phi(-x), valid for x > 0:
//   x/(x^2+1) * phi(x) <= Phi(-x) <= phi(x)/x
struct MillsBounds {
  double lower;
  double upper;
};
MillsBounds mills_bounds(double x);

// First-order Euler-Maclaurin summation
//   sum_{n=a}^{b} f(n) = int_a^b f + int_a^b f' psi + (f(a) + f(b))/2,
// psi(x) = x - floor(x) - 1/2. For b = nullopt the sum runs to infinity and the
// boundary term is f(a)/2.
struct EulerMaclaurinResult {
  double value = 0.0;
  double integral = 0.0;    // int f
  double correction = 0.0;  // int f' psi
  double boundary = 0.0;    // endpoint half-weights
  // Bound on the part of int f' psi that was not integrated numerically
  // (infinite upper limit only; valid when f' is monotone beyond the window).
  double tail_bound = 0.0;
  std::size_t unit_intervals = 0;
};

struct EulerMaclaurinOptions {
  double tolerance = 1e-13;            // absolute target for the unintegrated remainder
  std::size_t max_unit_intervals = 1u << 20;
};

using RealFunction = std::function<double(double)>;

EulerMaclaurinResult euler_maclaurin_sum(const RealFunction& f, const RealFunction& f_prime, long a,
                                         std::optional<long> b,
                                         const EulerMaclaurinOptions& options = {});

// The series sum_{n>=0} Phi(-rho sqrt n) and its rho^2 scaling.
struct GaussianSumReport {
  double rho = 0.0;
  double value = 0.0;
  double scaled = 0.0;
  std::size_t truncation_n = 0;
  double tail_bound = 0.0;
};

GaussianSumReport heyde_gaussian_sum(double rho);

// rho^2 * sum_{n >= K/rho^2} Phi(-rho sqrt n).
double tail_gaussian_sum(double rho, double k);

// Limit of tail_gaussian_sum(rho, k) as rho -> 0: the integral
// int_K^inf Phi(-sqrt y) dy = (1 - K) Phi(-sqrt K) + sqrt(K) phi(sqrt K).
double tail_gaussian_limit(double k);

// sum_{n>=1} Phi(-eps sqrt(n) / sigma) / n, the log-weighted Gaussian series.
struct LogWeightedSum {
  double value = 0.0;
  double tail_bound = 0.0;
  std::size_t direct_terms = 0;
};
LogWeightedSum log_weighted_gaussian_sum_report(double eps, double sigma);
double log_weighted_gaussian_sum(double eps, double sigma);

}  // namespace birkhoff::gaussian

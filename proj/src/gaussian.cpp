#include "birkhoff/gaussian.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "birkhoff/errors.hpp"
#include "birkhoff/numeric.hpp"

namespace birkhoff::gaussian {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr std::size_t kHardCap = 1'000'000'000;

// Integrates g over [0, 1]. tanh-sinh copes with the integrable endpoint
// singularities that f' may have at integers.
double unit_integral(const std::function<double(double)>& g) {
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  double err = 0.0;
  return integrator.integrate(g, 0.0, 1.0, 1e-14, &err);
}

void require_positive(double x, const char* what) {
  if (!std::isfinite(x) || x <= 0.0) throw std::domain_error(what);
}

}  // namespace

double phi_cdf(double x) {
  if (!std::isfinite(x)) throw std::domain_error("phi_cdf: non-finite argument");
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double phi_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

MillsBounds mills_bounds(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error("mills_bounds: requires finite x > 0");
  }
  const double density = phi_pdf(x);
  return {x / (x * x + 1.0) * density, density / x};
}

EulerMaclaurinResult euler_maclaurin_sum(const RealFunction& f, const RealFunction& f_prime, long a,
                                         std::optional<long> b,
                                         const EulerMaclaurinOptions& options) {
  EulerMaclaurinResult out;
  if (b && *b < a) throw std::domain_error("euler_maclaurin_sum: requires a <= b");
  if (b && *b == a) {
    out.boundary = f(static_cast<double>(a));
    out.value = out.boundary;
    return out;
  }

  CompensatedSum integral;
  CompensatedSum correction;
  auto integrate_unit = [&](long j) {
    const double base = static_cast<double>(j);
    integral.add(unit_integral([&](double t) { return f(base + t); }));
    correction.add(unit_integral([&](double t) { return f_prime(base + t) * (t - 0.5); }));
    ++out.unit_intervals;
  };

  if (b) {
    for (long j = a; j < *b; ++j) integrate_unit(j);
    out.integral = integral.value();
    out.correction = correction.value();
    out.boundary = 0.5 * (f(static_cast<double>(a)) + f(static_cast<double>(*b)));
    out.value = out.integral + out.correction + out.boundary;
    return out;
  }

  // Infinite upper limit: probe that f decays before trusting the improper integrals.
  double probe_max = 0.0;
  double probe_last = 0.0;
  for (int k = 4; k <= 50; k += 2) {
    const double v = std::fabs(f(static_cast<double>(a) + std::ldexp(1.0, k)));
    if (!std::isfinite(v)) {
      throw PreconditionError("euler_maclaurin_sum: f is not finite on the tail probe grid");
    }
    probe_max = std::max(probe_max, v);
    probe_last = v;
  }
  if (probe_last > 1e-8 * std::max(probe_max, std::numeric_limits<double>::min()) &&
      probe_last > 1e-300) {
    throw PreconditionError("euler_maclaurin_sum: f does not decay at infinity");
  }

  // Beyond the window, monotone f' gives |int f' psi| <= |f'(window)| / 8.
  long j = a;
  double remainder = std::fabs(f_prime(static_cast<double>(j))) / 8.0;
  while (remainder > options.tolerance && out.unit_intervals < options.max_unit_intervals) {
    integrate_unit(j);
    ++j;
    remainder = std::fabs(f_prime(static_cast<double>(j))) / 8.0;
  }
  out.tail_bound = remainder;

  boost::math::quadrature::exp_sinh<double> semi_infinite;
  double err = 0.0;
  const double start = static_cast<double>(j);
  integral.add(semi_infinite.integrate([&](double x) { return f(start + x); }, 1e-14, &err));

  out.integral = integral.value();
  out.correction = correction.value();
  out.boundary = 0.5 * f(static_cast<double>(a));
  out.value = out.integral + out.correction + out.boundary;
  return out;
}

GaussianSumReport heyde_gaussian_sum(double rho) {
  require_positive(rho, "heyde_gaussian_sum: requires rho > 0");
  GaussianSumReport rep;
  rep.rho = rho;
  CompensatedSum sum;
  const double rho2 = rho * rho;
  std::size_t n = 0;
  double bound = std::numeric_limits<double>::infinity();
  for (;; ++n) {
    const double term = phi_cdf(-rho * std::sqrt(static_cast<double>(n)));
    sum.add(term);
    if (n == 0) continue;
    // sum_{m>n} Phi(-rho sqrt m) <= int_n^inf phi(rho sqrt x)/(rho sqrt x) dx = 2 Phi(-rho sqrt n)/rho^2
    bound = 2.0 * term / rho2;
    if (bound < 1e-12 * sum.value() || n >= kHardCap) break;
  }
  rep.value = sum.value();
  rep.scaled = rho2 * rep.value;
  rep.truncation_n = n;
  rep.tail_bound = bound;
  return rep;
}

double tail_gaussian_sum(double rho, double k) {
  require_positive(rho, "tail_gaussian_sum: requires rho > 0");
  require_positive(k, "tail_gaussian_sum: requires K > 0");
  const double rho2 = rho * rho;
  const double start = std::ceil(k / rho2);
  if (start > static_cast<double>(kHardCap)) {
    if (phi_cdf(-std::sqrt(k)) == 0.0) return 0.0;
    // Too many terms to add directly: switch to the Euler-Maclaurin form.
    auto f = [rho](double x) { return phi_cdf(-rho * std::sqrt(x)); };
    auto fp = [rho](double x) {
      const double s = std::sqrt(x);
      return -rho * phi_pdf(rho * s) / (2.0 * s);
    };
    return rho2 * euler_maclaurin_sum(f, fp, static_cast<long>(start), std::nullopt).value;
  }
  CompensatedSum sum;
  for (auto n = static_cast<std::size_t>(start);; ++n) {
    const double term = phi_cdf(-rho * std::sqrt(static_cast<double>(n)));
    sum.add(term);
    const double bound = 2.0 * term / rho2;
    if (bound < 1e-12 * sum.value() || bound * rho2 < 1e-300 || n >= kHardCap) break;
  }
  return rho2 * sum.value();
}

double tail_gaussian_limit(double k) {
  require_positive(k, "tail_gaussian_limit: requires K > 0");
  const double r = std::sqrt(k);
  return (1.0 - k) * phi_cdf(-r) + r * phi_pdf(r);
}

LogWeightedSum log_weighted_gaussian_sum_report(double eps, double sigma) {
  if (!std::isfinite(eps) || eps <= 0.0 || eps >= 1.0) {
    throw std::domain_error("log_weighted_gaussian_sum: requires 0 < eps < 1");
  }
  require_positive(sigma, "log_weighted_gaussian_sum: requires sigma > 0");
  const double rho = eps / sigma;
  const double rho2 = rho * rho;
  constexpr std::size_t kDirect = 1'000'000;

  LogWeightedSum out;
  CompensatedSum sum;
  std::size_t n = 1;
  for (;; ++n) {
    const double term = phi_cdf(-rho * std::sqrt(static_cast<double>(n)));
    sum.add(term / static_cast<double>(n));
    // sum_{m>n} Phi(-rho sqrt m)/m <= (1/n) * 2 Phi(-rho sqrt n)/rho^2
    const double bound = 2.0 * term / (rho2 * static_cast<double>(n));
    if (bound < 1e-13 * sum.value()) {
      out.value = sum.value();
      out.tail_bound = bound;
      out.direct_terms = n;
      return out;
    }
    if (n >= kDirect) break;
  }

  auto f = [rho](double x) { return phi_cdf(-rho * std::sqrt(x)) / x; };
  auto fp = [rho](double x) {
    const double s = std::sqrt(x);
    return -rho * phi_pdf(rho * s) / (2.0 * s * x) - phi_cdf(-rho * s) / (x * x);
  };
  const auto tail = euler_maclaurin_sum(f, fp, static_cast<long>(n + 1), std::nullopt);
  out.value = sum.value() + tail.value;
  out.tail_bound = tail.tail_bound;
  out.direct_terms = n;
  return out;
}

double log_weighted_gaussian_sum(double eps, double sigma) {
  return log_weighted_gaussian_sum_report(eps, sigma).value;
}

}  // namespace birkhoff::gaussian

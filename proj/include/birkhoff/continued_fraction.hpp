#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace birkhoff::cf {

// Certified enclosure lo <= x <= hi of a real number in (0, 1).
struct RealInterval {
  mpq_class lo;
  mpq_class hi;
};

// Enclosure of a named constant ("pi-3", "e-2", "golden", "sqrt2-1") at the
// given binary precision, computed with directed rounding.
RealInterval named_constant(const std::string& name, unsigned bits);
bool is_named_constant(const std::string& name);

enum class DigitSource { Rational, Interval };

struct CFExpansion {
  std::vector<mpz_class> digits;  // a_1, a_2, ...
  DigitSource source = DigitSource::Rational;
  bool terminated = false;  // rational input whose expansion ended
};

// First n digits of an exact rational in (0, 1). The expansion of a rational is
// finite: fewer than n digits come back with terminated = true.
CFExpansion cf_digits(const mpq_class& x, std::size_t n);

// First n digits of any real enclosed by x. A digit is emitted only when the
// floor agrees across the whole interval; throws PrecisionExhausted naming the
// certified count if that stops before n digits.
CFExpansion cf_digits(const RealInterval& x, std::size_t n);

struct ConvergentPair {
  mpz_class p;
  mpz_class q;
  std::size_t index = 0;
};

// p_k / q_k for k = 1..n from the recurrences p_k = a_k p_{k-1} + p_{k-2},
// q_k = a_k q_{k-1} + q_{k-2} seeded with p_{-1}=1, q_{-1}=0, p_0=0, q_0=1.
// Throws ArityError when fewer than n digits are available.
std::vector<ConvergentPair> convergents(const CFExpansion& digits, std::size_t n);

// Folds [a_1, ..., a_n] bottom-up as an exact rational.
mpq_class evaluate(const std::vector<mpz_class>& digits, std::size_t n);

// 1/(2 q_{n+1}^2) <= |x - p_n/q_n| <= 1/q_n^2, checked exactly. The three
// quantities are reported as natural logs (they underflow doubles quickly).
struct DiophantineReport {
  std::size_t n = 0;
  bool pass = false;
  bool terminal = false;  // x == p_n/q_n; the left inequality is degenerate
  double log_error = 0.0;
  double log_lower = 0.0;
  double log_upper = 0.0;
};
DiophantineReport diophantine_check(const mpq_class& x, std::size_t n);
DiophantineReport diophantine_check(const RealInterval& x, std::size_t n);

// log q_n(x) / n.
double levy_statistic(const mpq_class& x, std::size_t n);
double levy_statistic(const RealInterval& x, std::size_t n);
// log q for a positive big integer, from its bit length and leading mantissa.
double log_q(const mpz_class& q);

// ---- batch kernels over random dyadic seeds ----------------------------------

// Seeds are k / 2^bits drawn from CounterRng(seed, stream) at index i.
mpq_class random_seed_point(std::uint64_t seed, std::uint64_t index, unsigned bits);

struct IdentityCheckSummary {
  std::size_t seeds = 0;
  std::size_t checks = 0;
  std::size_t diophantine_failures = 0;
  std::size_t determinant_failures = 0;
  std::size_t coprime_failures = 0;
  std::size_t short_expansions = 0;  // seeds whose expansion ended before n_max + 1
};

// For each seed and every n <= n_max: inequality, determinant identity
// p_n q_{n-1} - p_{n-1} q_n = (-1)^{n-1}, and gcd(p_n, q_n) = 1.
IdentityCheckSummary identity_batch(std::uint64_t seed, std::size_t count, std::size_t n_max,
                                    unsigned bits);
IdentityCheckSummary identity_batch_serial(std::uint64_t seed, std::size_t count,
                                           std::size_t n_max, unsigned bits);

// log q_n / n for each seed (NaN when the expansion is shorter than n).
std::vector<double> levy_batch(std::uint64_t seed, std::size_t count, std::size_t n,
                               unsigned bits);
std::vector<double> levy_batch_serial(std::uint64_t seed, std::size_t count, std::size_t n,
                                      unsigned bits);

}  // namespace birkhoff::cf

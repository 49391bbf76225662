#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

#include "birkhoff/rng.hpp"

namespace birkhoff {

// log|z| for a nonzero big integer, accurate to double precision for any size.
double log_abs(const mpz_class& z);

// num/den as a double without overflow for large operands.
double ratio_to_double(const mpz_class& num, const mpz_class& den);

// Parses "p/q", a plain integer, or a decimal string such as "0.4142" into an
// exact rational. Throws std::invalid_argument on malformed input.
mpq_class parse_rational(std::string_view text);

// Uniform dyadic rational k / 2^bits with k drawn from {1, ..., 2^bits - 1}.
// Draws words 0 .. ceil(bits/64)-1 at the given sample index.
mpz_class random_dyadic_numerator(const CounterRng& rng, std::uint64_t index, unsigned bits);

// Exact rational point x = num / den with den > 0. Not kept in lowest terms:
// orbit arithmetic only needs the ratio, and skipping the gcd is much cheaper.
struct ExactPoint {
  mpz_class num;
  mpz_class den;

  static ExactPoint from_rational(const mpq_class& q) {
    return {q.get_num(), q.get_den()};
  }
  static ExactPoint from_double(double x);

  mpq_class to_rational() const {
    mpq_class q(num, den);
    q.canonicalize();
    return q;
  }
  double to_double() const { return ratio_to_double(num, den); }
};

}  // namespace birkhoff

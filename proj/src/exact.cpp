#include "birkhoff/exact.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace birkhoff {

double log_abs(const mpz_class& z) {
  if (sgn(z) == 0) throw std::domain_error("log_abs: zero argument");
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, z.get_mpz_t());
  return std::log(std::fabs(mant)) + static_cast<double>(exp) * std::numbers::ln2;
}

double ratio_to_double(const mpz_class& num, const mpz_class& den) {
  if (sgn(num) == 0) return 0.0;
  long en = 0;
  long ed = 0;
  const double mn = mpz_get_d_2exp(&en, num.get_mpz_t());
  const double md = mpz_get_d_2exp(&ed, den.get_mpz_t());
  return std::ldexp(mn / md, static_cast<int>(en - ed));
}

mpq_class parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      mpz_class p(s.substr(0, slash), 10);
      mpz_class q(s.substr(slash + 1), 10);
      if (sgn(q) == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
      mpq_class r(p, q);
      r.canonicalize();
      return r;
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      const std::size_t frac = s.size() - dot - 1;
      if (digits.empty() || digits == "-" || digits == "+") {
        throw std::invalid_argument("malformed decimal '" + s + "'");
      }
      if (digits.front() == '+') digits.erase(0, 1);
      mpz_class p(digits, 10);
      mpz_class q;
      mpz_ui_pow_ui(q.get_mpz_t(), 10, frac);
      mpq_class r(p, q);
      r.canonicalize();
      return r;
    }
    return mpq_class(mpz_class(s, 10));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("malformed rational literal '" + s + "'");
  }
}

mpz_class random_dyadic_numerator(const CounterRng& rng, std::uint64_t index, unsigned bits) {
  if (bits == 0) throw std::invalid_argument("random_dyadic_numerator: bits must be positive");
  const unsigned words = (bits + 63) / 64;
  mpz_class k = 0;
  for (unsigned w = 0; w < words; ++w) {
    const std::uint64_t r = rng.bits64(index, w);
    k <<= 64;
    k += mpz_class(static_cast<unsigned long>(r));
  }
  const unsigned excess = words * 64 - bits;
  if (excess > 0) k >>= excess;
  // Zero maps to the excluded endpoint; move it to the smallest grid point.
  if (sgn(k) == 0) k = 1;
  return k;
}

ExactPoint ExactPoint::from_double(double x) {
  if (!std::isfinite(x)) throw std::domain_error("ExactPoint::from_double: non-finite input");
  int e = 0;
  const double m = std::frexp(x, &e);
  // m * 2^53 is an integer for every finite double.
  mpz_class num(std::ldexp(m, 53));
  mpz_class den = 1;
  const int shift = 53 - e;
  if (shift >= 0) {
    den <<= shift;
  } else {
    num <<= -shift;
  }
  return {num, den};
}

}  // namespace birkhoff

#include "birkhoff/continued_fraction.hpp"

#include <mpfr.h>

#include <cmath>
#include <limits>
#include <memory>

#include "birkhoff/errors.hpp"
#include "birkhoff/exact.hpp"
#include "birkhoff/rng.hpp"

namespace birkhoff::cf {

namespace {

constexpr std::uint64_t kSeedStream = 0xCF;

struct MpfrValue {
  mpfr_t v;
  explicit MpfrValue(unsigned bits) { mpfr_init2(v, bits); }
  ~MpfrValue() { mpfr_clear(v); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;

  mpq_class exact() const {
    mpz_class m;
    const mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), v);
    mpq_class q(m);
    if (e >= 0) {
      mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    } else {
      mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    }
    return q;
  }
};

mpq_class constant_bound(const std::string& name, unsigned bits, mpfr_rnd_t rnd) {
  MpfrValue x(bits);
  if (name == "pi-3") {
    mpfr_const_pi(x.v, rnd);
    mpfr_sub_ui(x.v, x.v, 3, rnd);
  } else if (name == "e-2") {
    mpfr_set_ui(x.v, 1, rnd);
    mpfr_exp(x.v, x.v, rnd);
    mpfr_sub_ui(x.v, x.v, 2, rnd);
  } else if (name == "golden") {
    mpfr_set_ui(x.v, 5, rnd);
    mpfr_sqrt(x.v, x.v, rnd);
    mpfr_sub_ui(x.v, x.v, 1, rnd);
    mpfr_div_2ui(x.v, x.v, 1, rnd);
  } else if (name == "sqrt2-1") {
    mpfr_set_ui(x.v, 2, rnd);
    mpfr_sqrt(x.v, x.v, rnd);
    mpfr_sub_ui(x.v, x.v, 1, rnd);
  } else {
    throw std::invalid_argument("unknown constant '" + name + "'");
  }
  return x.exact();
}

// One Gauss step on a rational endpoint num/den: returns floor(den/num) and
// replaces the pair by (den mod num, num).
mpz_class gauss_step(mpz_class& num, mpz_class& den) {
  mpz_class q;
  mpz_class r;
  mpz_tdiv_qr(q.get_mpz_t(), r.get_mpz_t(), den.get_mpz_t(), num.get_mpz_t());
  den.swap(num);
  num.swap(r);
  return q;
}

mpq_class abs_q(const mpq_class& x) { return sgn(x) < 0 ? mpq_class(-x) : x; }

double log_rational(const mpq_class& x) {
  return log_abs(x.get_num()) - log_abs(x.get_den());
}

struct RecurrenceState {
  mpz_class p_prev = 1, q_prev = 0;  // index k-1
  mpz_class p = 0, q = 1;            // index k
  void push(const mpz_class& a) {
    mpz_class p_next = a * p + p_prev;
    mpz_class q_next = a * q + q_prev;
    p_prev.swap(p);
    q_prev.swap(q);
    p.swap(p_next);
    q.swap(q_next);
  }
};

IdentityCheckSummary check_seed(const mpq_class& x, std::size_t n_max) {
  IdentityCheckSummary s;
  s.seeds = 1;
  const CFExpansion exp = cf_digits(x, n_max + 1);
  if (exp.digits.size() < n_max + 1) {
    ++s.short_expansions;
    return s;
  }
  RecurrenceState r;
  mpz_class g;
  for (std::size_t n = 1; n <= n_max; ++n) {
    r.push(exp.digits[n - 1]);
    ++s.checks;
    // determinant identity p_n q_{n-1} - p_{n-1} q_n = (-1)^{n-1}
    const mpz_class det = r.p * r.q_prev - r.p_prev * r.q;
    const int expected = (n % 2 == 1) ? 1 : -1;
    if (det != expected) ++s.determinant_failures;
    mpz_gcd(g.get_mpz_t(), r.p.get_mpz_t(), r.q.get_mpz_t());
    if (g != 1) ++s.coprime_failures;
    const mpz_class q_next = exp.digits[n] * r.q + r.q_prev;
    const mpq_class err = abs_q(x - mpq_class(r.p, r.q));
    const mpq_class upper(1, r.q * r.q);
    const mpq_class lower(1, 2 * q_next * q_next);
    if (!(lower <= err && err <= upper)) ++s.diophantine_failures;
  }
  return s;
}

void merge(IdentityCheckSummary& into, const IdentityCheckSummary& s) {
  into.seeds += s.seeds;
  into.checks += s.checks;
  into.diophantine_failures += s.diophantine_failures;
  into.determinant_failures += s.determinant_failures;
  into.coprime_failures += s.coprime_failures;
  into.short_expansions += s.short_expansions;
}

double levy_for_seed(const mpq_class& x, std::size_t n) {
  mpz_class num = x.get_num();
  mpz_class den = x.get_den();
  RecurrenceState r;
  for (std::size_t k = 0; k < n; ++k) {
    if (sgn(num) == 0) return std::numeric_limits<double>::quiet_NaN();
    r.push(gauss_step(num, den));
  }
  return log_q(r.q) / static_cast<double>(n);
}

}  // namespace

bool is_named_constant(const std::string& name) {
  return name == "pi-3" || name == "e-2" || name == "golden" || name == "sqrt2-1";
}

RealInterval named_constant(const std::string& name, unsigned bits) {
  return {constant_bound(name, bits, MPFR_RNDD), constant_bound(name, bits, MPFR_RNDU)};
}

CFExpansion cf_digits(const mpq_class& x, std::size_t n) {
  if (!(x > 0 && x < 1)) throw std::domain_error("cf_digits: requires 0 < x < 1");
  CFExpansion out;
  out.source = DigitSource::Rational;
  mpz_class num = x.get_num();
  mpz_class den = x.get_den();
  while (out.digits.size() < n) {
    out.digits.push_back(gauss_step(num, den));
    if (sgn(num) == 0) {
      out.terminated = true;
      break;
    }
  }
  return out;
}

CFExpansion cf_digits(const RealInterval& x, std::size_t n) {
  if (!(x.lo > 0 && x.hi < 1 && x.lo <= x.hi)) {
    throw std::domain_error("cf_digits: interval must lie inside (0, 1)");
  }
  CFExpansion out;
  out.source = DigitSource::Interval;
  mpz_class lo_num = x.lo.get_num(), lo_den = x.lo.get_den();
  mpz_class hi_num = x.hi.get_num(), hi_den = x.hi.get_den();
  while (out.digits.size() < n) {
    if (sgn(lo_num) == 0 || sgn(hi_num) == 0) break;
    mpz_class a_lo = lo_den / lo_num;  // floor(1/lo) >= floor(1/hi)
    mpz_class a_hi = hi_den / hi_num;
    if (a_lo != a_hi) break;
    gauss_step(lo_num, lo_den);
    gauss_step(hi_num, hi_den);
    // G is decreasing on a branch, so the endpoints trade places.
    lo_num.swap(hi_num);
    lo_den.swap(hi_den);
    out.digits.push_back(std::move(a_lo));
  }
  if (out.digits.size() < n) {
    throw PrecisionExhausted("cf_digits: only " + std::to_string(out.digits.size()) +
                                 " digits certified at this precision",
                             out.digits.size());
  }
  return out;
}

std::vector<ConvergentPair> convergents(const CFExpansion& digits, std::size_t n) {
  if (digits.digits.size() < n) {
    throw ArityError("convergents: " + std::to_string(n) + " requested but only " +
                     std::to_string(digits.digits.size()) + " digits available");
  }
  std::vector<ConvergentPair> out;
  out.reserve(n);
  RecurrenceState r;
  for (std::size_t k = 0; k < n; ++k) {
    if (digits.digits[k] < 1) throw std::domain_error("convergents: digits must be >= 1");
    r.push(digits.digits[k]);
    out.push_back({r.p, r.q, k + 1});
  }
  return out;
}

mpq_class evaluate(const std::vector<mpz_class>& digits, std::size_t n) {
  if (digits.size() < n || n == 0) throw ArityError("evaluate: not enough digits");
  mpq_class tail = 0;
  for (std::size_t k = n; k-- > 0;) {
    tail = mpq_class(1) / (mpq_class(digits[k]) + tail);
    tail.canonicalize();
  }
  return tail;
}

DiophantineReport diophantine_check(const mpq_class& x, std::size_t n) {
  if (n == 0) throw std::domain_error("diophantine_check: requires n >= 1");
  const CFExpansion exp = cf_digits(x, n + 1);
  if (exp.digits.size() < n) {
    throw ArityError("diophantine_check: expansion has only " +
                     std::to_string(exp.digits.size()) + " digits");
  }
  const auto conv = convergents(exp, n);
  const ConvergentPair& c = conv.back();
  DiophantineReport rep;
  rep.n = n;
  const mpq_class err = abs_q(x - mpq_class(c.p, c.q));
  const mpq_class upper(1, c.q * c.q);
  rep.log_upper = log_rational(upper);
  if (sgn(err) == 0) {
    rep.terminal = true;
    rep.pass = true;
    rep.log_error = -std::numeric_limits<double>::infinity();
    rep.log_lower = -std::numeric_limits<double>::infinity();
    return rep;
  }
  const mpz_class q_prev = conv.size() >= 2 ? conv[conv.size() - 2].q : mpz_class(1);
  const mpz_class q_next = exp.digits[n] * c.q + q_prev;
  const mpq_class lower(1, 2 * q_next * q_next);
  rep.log_error = log_rational(err);
  rep.log_lower = log_rational(lower);
  rep.pass = lower <= err && err <= upper;
  return rep;
}

DiophantineReport diophantine_check(const RealInterval& x, std::size_t n) {
  if (n == 0) throw std::domain_error("diophantine_check: requires n >= 1");
  const CFExpansion exp = cf_digits(x, n + 1);
  const auto conv = convergents(exp, n + 1);
  const ConvergentPair& c = conv[n - 1];
  const mpq_class pn(c.p, c.q);
  // x lies strictly inside the depth-(n+1) cylinder, so x - p_n/q_n has one sign.
  mpq_class e1 = abs_q(x.lo - pn);
  mpq_class e2 = abs_q(x.hi - pn);
  if (e2 < e1) std::swap(e1, e2);
  const mpq_class upper(1, c.q * c.q);
  const mpq_class lower(1, 2 * conv[n].q * conv[n].q);
  DiophantineReport rep;
  rep.n = n;
  rep.log_upper = log_rational(upper);
  rep.log_lower = log_rational(lower);
  if (sgn(e1) == 0) {
    throw PrecisionExhausted("diophantine_check: enclosure touches the convergent", n);
  }
  rep.log_error = 0.5 * (log_rational(e1) + log_rational(e2));
  rep.pass = lower <= e1 && e2 <= upper;
  return rep;
}

double log_q(const mpz_class& q) {
  if (sgn(q) <= 0) throw std::domain_error("log_q: requires q > 0");
  return log_abs(q);
}

double levy_statistic(const mpq_class& x, std::size_t n) {
  if (n == 0) throw std::domain_error("levy_statistic: requires n >= 1");
  const auto conv = convergents(cf_digits(x, n), n);
  return log_q(conv.back().q) / static_cast<double>(n);
}

double levy_statistic(const RealInterval& x, std::size_t n) {
  if (n == 0) throw std::domain_error("levy_statistic: requires n >= 1");
  const auto conv = convergents(cf_digits(x, n), n);
  return log_q(conv.back().q) / static_cast<double>(n);
}

mpq_class random_seed_point(std::uint64_t seed, std::uint64_t index, unsigned bits) {
  const CounterRng rng(seed, kSeedStream);
  mpz_class den = 1;
  den <<= bits;
  mpq_class x(random_dyadic_numerator(rng, index, bits), den);
  x.canonicalize();
  return x;
}

IdentityCheckSummary identity_batch_serial(std::uint64_t seed, std::size_t count,
                                           std::size_t n_max, unsigned bits) {
  IdentityCheckSummary total;
  for (std::size_t i = 0; i < count; ++i) {
    merge(total, check_seed(random_seed_point(seed, i, bits), n_max));
  }
  return total;
}

IdentityCheckSummary identity_batch(std::uint64_t seed, std::size_t count, std::size_t n_max,
                                    unsigned bits) {
  std::vector<IdentityCheckSummary> per_seed(count);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    per_seed[static_cast<std::size_t>(i)] =
        check_seed(random_seed_point(seed, static_cast<std::uint64_t>(i), bits), n_max);
  }
  IdentityCheckSummary total;
  for (const auto& s : per_seed) merge(total, s);
  return total;
}

std::vector<double> levy_batch_serial(std::uint64_t seed, std::size_t count, std::size_t n,
                                      unsigned bits) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = levy_for_seed(random_seed_point(seed, i, bits), n);
  }
  return out;
}

std::vector<double> levy_batch(std::uint64_t seed, std::size_t count, std::size_t n,
                               unsigned bits) {
  std::vector<double> out(count);
  const auto total = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < total; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = levy_for_seed(random_seed_point(seed, idx, bits), n);
  }
  return out;
}

}  // namespace birkhoff::cf

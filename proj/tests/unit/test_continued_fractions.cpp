#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "birkhoff/continued_fraction.hpp"
#include "birkhoff/errors.hpp"
#include "birkhoff/exact.hpp"
#include "birkhoff/numeric.hpp"

using namespace birkhoff;
using namespace birkhoff::cf;

namespace {
std::vector<long> as_longs(const CFExpansion& e) {
  std::vector<long> out;
  for (const auto& d : e.digits) out.push_back(d.get_si());
  return out;
}
std::string frac(const ConvergentPair& c) { return c.p.get_str() + "/" + c.q.get_str(); }
}  // namespace

TEST_CASE("cf_digits of rationals terminate") {
  const auto e = cf_digits(mpq_class(2, 5), 10);
  CHECK(as_longs(e) == std::vector<long>{2, 2});
  CHECK(e.terminated);
  const auto conv = convergents(e, 2);
  CHECK(frac(conv[0]) == "1/2");
  CHECK(frac(conv[1]) == "2/5");
  CHECK_THROWS_AS(convergents(e, 3), ArityError);
  CHECK_THROWS_AS(cf_digits(mpq_class(3, 2), 4), std::domain_error);
}

TEST_CASE("named constants through certified intervals") {
  const auto pi = cf_digits(named_constant("pi-3", 256), 8);
  CHECK(as_longs(pi) == std::vector<long>{7, 15, 1, 292, 1, 1, 1, 2});
  const auto conv = convergents(pi, 4);
  CHECK(frac(conv[0]) == "1/7");
  CHECK(frac(conv[1]) == "15/106");
  CHECK(frac(conv[2]) == "16/113");
  CHECK(frac(conv[3]) == "4687/33102");
  CHECK(evaluate(pi.digits, 4) == mpq_class(4687, 33102));

  CHECK(as_longs(cf_digits(named_constant("e-2", 256), 10)) ==
        std::vector<long>{1, 2, 1, 1, 4, 1, 1, 6, 1, 1});
  for (long d : as_longs(cf_digits(named_constant("sqrt2-1", 512), 60))) CHECK(d == 2);
  for (long d : as_longs(cf_digits(named_constant("golden", 512), 60))) CHECK(d == 1);
  CHECK_THROWS_AS(named_constant("tau", 64), std::invalid_argument);
}

TEST_CASE("precision exhaustion names the certified count") {
  try {
    cf_digits(named_constant("pi-3", 64), 200);
    FAIL("expected precision exhaustion");
  } catch (const PrecisionExhausted& e) {
    CHECK(e.certified() > 5);
    CHECK(e.certified() < 200);
  }
}

TEST_CASE("convergents of all-ones are Fibonacci ratios") {
  CFExpansion ones;
  for (int i = 0; i < 5; ++i) ones.digits.push_back(1);
  const auto conv = convergents(ones, 5);
  const char* want[] = {"1/1", "1/2", "2/3", "3/5", "5/8"};
  for (int i = 0; i < 5; ++i) CHECK(frac(conv[i]) == want[i]);
}

TEST_CASE("Diophantine check at the golden section") {
  const auto golden = named_constant("golden", 256);
  const auto rep = diophantine_check(golden, 5);
  CHECK(rep.pass);
  CHECK_FALSE(rep.terminal);
  CHECK(std::exp(rep.log_error) == doctest::Approx(0.0069660112501051518).epsilon(1e-12));
  CHECK(std::exp(rep.log_lower) == doctest::Approx(1.0 / 338.0).epsilon(1e-12));
  CHECK(std::exp(rep.log_upper) == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("Diophantine check at the last convergent of a rational") {
  const auto rep = diophantine_check(mpq_class(2, 5), 2);
  CHECK(rep.terminal);
  CHECK(rep.pass);
  CHECK_THROWS_AS(diophantine_check(mpq_class(2, 5), 3), ArityError);
}

TEST_CASE("convergent identities on random seeds") {
  const auto s = identity_batch(2024, 1000, 30, 128);
  CHECK(s.seeds == 1000);
  CHECK(s.checks == 30000);
  CHECK(s.diophantine_failures == 0);
  CHECK(s.determinant_failures == 0);
  CHECK(s.coprime_failures == 0);
  CHECK(s.short_expansions == 0);
}

TEST_CASE("re-evaluation and monotone denominators") {
  for (std::uint64_t i = 0; i < 30; ++i) {
    const mpq_class x = random_seed_point(11, i, 256);
    const auto e = cf_digits(x, 40);
    const auto conv = convergents(e, 40);
    for (std::size_t n = 1; n <= 40; ++n) {
      CHECK(evaluate(e.digits, n) == mpq_class(conv[n - 1].p, conv[n - 1].q));
      if (n >= 2) CHECK(conv[n - 1].q > conv[n - 2].q);
      CHECK(gcd(conv[n - 1].p, conv[n - 1].q) == 1);
    }
    for (const auto& d : e.digits) CHECK(d >= 1);
  }
}

TEST_CASE("log_q handles integers beyond double range") {
  const mpz_class q = mpz_class(3) << 5000;
  CHECK(log_q(q) == doctest::Approx(5000.0 * std::log(2.0) + std::log(3.0)).epsilon(1e-15));
  CHECK(log_q(mpz_class(1)) == 0.0);
}

TEST_CASE("Levy statistic: constant, golden point and a small ensemble") {
  CHECK(kLevy == doctest::Approx(1.1865691104156254528).epsilon(1e-15));
  const double g = levy_statistic(named_constant("golden", 2048), 1000);
  CHECK(g == doctest::Approx(std::log((std::sqrt(5.0) + 1.0) / 2.0)).epsilon(1e-3));
  const auto vals = levy_batch(3, 100, 400, 2400);
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  CHECK(mean == doctest::Approx(kLevy).epsilon(0.03));
}

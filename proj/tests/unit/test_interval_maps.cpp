#include <doctest.h>

#include <cmath>
#include <numbers>

#include "birkhoff/continued_fraction.hpp"
#include "birkhoff/errors.hpp"
#include "birkhoff/exact.hpp"
#include "birkhoff/interval_map.hpp"
#include "birkhoff/numeric.hpp"
#include "birkhoff/rng.hpp"

using namespace birkhoff;

namespace {
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

ExactPoint dyadic(std::uint64_t seed, std::uint64_t i, unsigned bits) {
  const CounterRng rng(seed, 77);
  return {random_dyadic_numerator(rng, i, bits), mpz_class(1) << bits};
}
}  // namespace

TEST_CASE("apply: Gauss and binary examples") {
  const auto gauss = make_map("gauss");
  const auto binary = make_map("binary");
  const ExactPoint two_fifths = ExactPoint::from_rational(mpq_class(2, 5));
  CHECK(gauss->apply(two_fifths).to_rational() == mpq_class(1, 2));
  CHECK(gauss->apply(0.4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::fabs(gauss->apply(kGolden) - kGolden) < 1e-15);
  CHECK(binary->apply(0.3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(binary->apply(ExactPoint::from_rational(mpq_class(3, 10))).to_rational() ==
        mpq_class(3, 5));

  CHECK_THROWS_AS(gauss->apply(ExactPoint::from_rational(mpq_class(1, 2))), OrbitTerminated);
  CHECK_THROWS_AS(binary->apply(ExactPoint::from_rational(mpq_class(1, 2))), OrbitTerminated);
  CHECK_THROWS_AS(gauss->apply(std::nan("")), OrbitTerminated);
}

TEST_CASE("log_derivative: closed forms, including branch endpoints") {
  const auto gauss = make_map("gauss");
  const auto binary = make_map("binary");
  CHECK(gauss->log_derivative(0.5) == doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-15));
  for (long k = 2; k <= 9; ++k) {
    const ExactPoint p = ExactPoint::from_rational(mpq_class(1, k));
    CHECK(gauss->log_derivative(p) ==
          doctest::Approx(2.0 * std::log(static_cast<double>(k))).epsilon(1e-14));
  }
  for (double x : {0.013, 0.3, 0.77, 0.999}) {
    CHECK(binary->log_derivative(x) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
    CHECK(gauss->log_derivative(x) == doctest::Approx(-2.0 * std::log(x)).epsilon(1e-13));
  }
}

TEST_CASE("birkhoff_sum: empty sum, constants and the golden fixed point") {
  const auto gauss = make_map("gauss");
  const auto logd = make_observable("log_derivative", *gauss);
  const ExactPoint x = dyadic(1, 0, 512);
  CHECK(birkhoff_sum(*gauss, logd, x, 0) == 0.0);
  const auto c = make_observable("constant:2.5", *gauss);
  CHECK(birkhoff_sum(*gauss, c, x, 40) == doctest::Approx(100.0).epsilon(1e-15));

  // The golden section is irrational; a few steps of the double orbit stay on it.
  const double expect = 2.0 * 6.0 * std::log((std::sqrt(5.0) + 1.0) / 2.0);
  CHECK(birkhoff_sum(*gauss, logd, kGolden, 6) == doctest::Approx(expect).epsilon(1e-9));
  // A high-order Fibonacci ratio follows the same orbit exactly for many steps.
  mpz_class f0 = 1, f1 = 1;
  for (int i = 0; i < 80; ++i) {
    mpz_class t = f0 + f1;
    f0 = f1;
    f1 = t;
  }
  const ExactPoint fib = ExactPoint::from_rational(mpq_class(f0, f1));
  CHECK(birkhoff_sum(*gauss, logd, fib, 30) ==
        doctest::Approx(2.0 * 30.0 * std::log((std::sqrt(5.0) + 1.0) / 2.0)).epsilon(1e-12));
}

TEST_CASE("birkhoff_sum: rational orbits terminate with the surviving length") {
  const auto gauss = make_map("gauss");
  const auto logd = make_observable("log_derivative", *gauss);
  // 2/5 -> 1/2, which is a branch endpoint.
  try {
    birkhoff_sum(*gauss, logd, ExactPoint::from_rational(mpq_class(2, 5)), 5);
    FAIL("expected a partial orbit");
  } catch (const PartialOrbitError& e) {
    CHECK(e.survived() == 1);
  }
  const auto binary = make_map("binary");
  const auto bit = make_observable("centered_bit", *binary);
  try {
    birkhoff_sum(*binary, bit, ExactPoint::from_rational(mpq_class(3, 8)), 10);
    FAIL("expected a partial orbit");
  } catch (const PartialOrbitError& e) {
    CHECK(e.survived() == 2);  // 3/8 -> 3/4 -> 1/2
  }
}

TEST_CASE("birkhoff_sum is additive along the orbit") {
  const auto gauss = make_map("gauss");
  const auto logd = make_observable("log_derivative", *gauss);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const ExactPoint x = dyadic(5, i, 600);
    const auto head = birkhoff_orbit(*gauss, logd, x, 37);
    const double tail = birkhoff_sum(*gauss, logd, head.endpoint, 41);
    const double whole = birkhoff_sum(*gauss, logd, x, 78);
    CHECK(whole == doctest::Approx(head.sum + tail).epsilon(1e-13));
  }
}

TEST_CASE("chain rule: S_n log|T'| is the log-derivative of the n-th iterate") {
  const auto gauss = make_map("gauss");
  const auto logd = make_observable("log_derivative", *gauss);
  // Differentiate G^3 numerically at points well inside one cylinder.
  for (double x : {0.3141, 0.62, 0.0937}) {
    const auto iter = [&](double y) { return gauss->apply(gauss->apply(gauss->apply(y))); };
    const double h = 1e-9;
    const double numeric = (iter(x + h) - iter(x - h)) / (2.0 * h);
    CHECK(birkhoff_sum(*gauss, logd, x, 3) ==
          doctest::Approx(std::log(std::fabs(numeric))).epsilon(1e-5));
  }
}

TEST_CASE("sandwich: log|(G^n)'x| - 2 log q_n lies in [0, 2 log 2]") {
  const auto gauss = make_map("gauss");
  const auto logd = make_observable("log_derivative", *gauss);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const ExactPoint x = dyadic(9, i, 1024);
    const auto digits = cf::cf_digits(x.to_rational(), 200);
    const auto conv = cf::convergents(digits, 200);
    for (std::size_t n : {1u, 2u, 5u, 20u, 100u, 200u}) {
      const double lhs = birkhoff_sum(*gauss, logd, x, n);
      const double diff = lhs - 2.0 * cf::log_q(conv[n - 1].q);
      CHECK(diff >= -1e-9);
      CHECK(diff <= 2.0 * std::numbers::ln2 + 1e-9);
    }
  }
}

TEST_CASE("verify_conditions: expansion power, Renyi ratio and partitions") {
  const auto gauss = make_map("gauss");
  const auto g1 = gauss->verify_conditions(2000, 1);
  CHECK_FALSE(g1.expansion_ok);
  CHECK(g1.min_expansion == doctest::Approx(1.0).epsilon(1e-3));
  const auto g2 = gauss->verify_conditions(2000, 2);
  CHECK(g2.expansion_ok);
  CHECK(g2.min_expansion > 1.0);
  CHECK(g2.passes());
  CHECK(g2.max_renyi <= 2.0);
  CHECK(g2.max_renyi > 1.9);

  const auto binary = make_map("binary");
  const auto b = binary->verify_conditions(1000, 1);
  CHECK(b.min_expansion == 2.0);
  CHECK(b.passes());

  const auto tri = make_map("finite:affine:0,1/4,1/2,1");
  CHECK(tri->verify_conditions(500).passes());
  CHECK(tri->preserves_lebesgue());
  const auto mob = make_map("finite:mobius:0,1/2,2,0,0,1;1/2,1,2,-1,0,1");
  CHECK(mob->verify_conditions(500).passes());
}

TEST_CASE("registry rejects malformed ids") {
  CHECK_THROWS_AS(make_map("tent"), ConfigError);
  CHECK_THROWS_AS(make_map("finite:affine:0,1/2,1/3,1"), ConfigError);
  CHECK_THROWS_AS(make_map("finite:mobius:0,1,1,0"), ConfigError);
  const auto gauss = make_map("gauss");
  CHECK_THROWS_AS(make_observable("nope", *gauss), ConfigError);
  CHECK_THROWS_AS(make_observable("constant:x", *gauss), ConfigError);
  CHECK(make_observable("log_derivative", *gauss).mean() == doctest::Approx(kTwoLevy));
}

TEST_CASE("branch round trips") {
  const auto gauss = make_map("gauss");
  for (std::size_t k = 1; k <= 50; ++k) {
    const Branch br = gauss->branch(k);
    for (double t : {0.1, 0.5, 0.9}) {
      const double x = br.lo_d() + t * (br.hi_d() - br.lo_d());
      CHECK(std::fabs(br.inverse(br.forward(x)) - x) < 1e-12);
      CHECK(std::fabs(br.derivative(x)) >= 1.0);
    }
  }
}

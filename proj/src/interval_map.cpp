#include "birkhoff/interval_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "birkhoff/errors.hpp"
#include "birkhoff/numeric.hpp"

namespace birkhoff {

// ---- Mobius / Branch --------------------------------------------------------

double Mobius::operator()(double x) const {
  return (a.get_d() * x + b.get_d()) / (c.get_d() * x + d.get_d());
}

double Mobius::derivative(double x) const {
  const double den = c.get_d() * x + d.get_d();
  return determinant().get_d() / (den * den);
}

double Mobius::second_derivative(double x) const {
  const double den = c.get_d() * x + d.get_d();
  return -2.0 * c.get_d() * determinant().get_d() / (den * den * den);
}

double Mobius::inverse(double y) const {
  return (d.get_d() * y - b.get_d()) / (a.get_d() - c.get_d() * y);
}

mpq_class Mobius::operator()(const mpq_class& x) const {
  mpq_class r = (mpq_class(a) * x + mpq_class(b)) / (mpq_class(c) * x + mpq_class(d));
  r.canonicalize();
  return r;
}

Branch::Branch(mpq_class lo, mpq_class hi, Mobius map)
    : lo_(std::move(lo)), hi_(std::move(hi)), map_(std::move(map)) {
  if (!(lo_ < hi_)) throw ConfigError("branch domain must satisfy lo < hi");
  if (sgn(map_.determinant()) == 0) throw ConfigError("branch map is degenerate (ad - bc = 0)");
  // A pole inside the closed domain would break monotonicity.
  if (sgn(map_.c) != 0) {
    const mpq_class pole(-map_.d, map_.c);
    if (pole >= lo_ && pole <= hi_) throw ConfigError("branch map has a pole inside its domain");
  }
  lo_d_ = lo_.get_d();
  hi_d_ = hi_.get_d();
}

std::pair<mpq_class, mpq_class> Branch::image() const {
  mpq_class u = map_(lo_);
  mpq_class v = map_(hi_);
  if (v < u) std::swap(u, v);
  return {u, v};
}

bool Branch::contains_interior(const ExactPoint& x) const {
  // lo < num/den < hi with den > 0
  const mpz_class lhs_lo = x.num * lo_.get_den();
  const mpz_class rhs_lo = lo_.get_num() * x.den;
  if (cmp(lhs_lo, rhs_lo) <= 0) return false;
  const mpz_class lhs_hi = x.num * hi_.get_den();
  const mpz_class rhs_hi = hi_.get_num() * x.den;
  return cmp(lhs_hi, rhs_hi) < 0;
}

// ---- Observable -------------------------------------------------------------

Observable Observable::log_derivative(double mean) {
  Observable o;
  o.name_ = "log_derivative";
  o.eval_ = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
  o.mean_ = mean;
  o.log_derivative_ = true;
  return o;
}

Observable Observable::function(std::string name, std::function<double(double)> eval,
                                double mean) {
  Observable o;
  o.name_ = std::move(name);
  o.eval_ = std::move(eval);
  o.mean_ = mean;
  return o;
}

// ---- IntervalMap ------------------------------------------------------------

namespace {

const Observable& zero_observable() {
  static const Observable zero = Observable::function("zero", [](double) { return 0.0; }, 0.0);
  return zero;
}

}  // namespace

std::optional<double> IntervalMap::advance(OrbitState& state, const Observable& f) const {
  const auto idx = locate(state.point);
  if (!idx) return std::nullopt;
  const Branch br = branch(*idx);
  const Mobius& m = br.mobius();
  ExactPoint& x = state.point;
  mpz_class num = m.a * x.num + m.b * x.den;
  mpz_class den = m.c * x.num + m.d * x.den;
  double value = 0.0;
  if (f.is_log_derivative()) {
    value = log_abs(m.determinant()) - 2.0 * (log_abs(den) - log_abs(x.den));
  } else {
    value = f(x.to_double());
  }
  if (sgn(den) < 0) {
    num = -num;
    den = -den;
  }
  x.num = std::move(num);
  x.den = std::move(den);
  state.last_digit = std::numeric_limits<double>::quiet_NaN();
  return value;
}

ExactPoint IntervalMap::apply(const ExactPoint& x) const {
  OrbitState state{x, {}, {}, 0.0};
  if (!advance(state, zero_observable())) {
    throw OrbitTerminated("point is on a branch endpoint or outside every branch domain");
  }
  return state.point;
}

double IntervalMap::apply(double x) const {
  if (!std::isfinite(x)) throw OrbitTerminated("non-finite point");
  const ExactPoint p = ExactPoint::from_double(x);
  const auto idx = locate(p);
  if (!idx) throw OrbitTerminated("point is on a branch endpoint or outside every branch domain");
  return branch(*idx).forward(x);
}

double IntervalMap::log_derivative(const ExactPoint& x) const {
  OrbitState state{x, {}, {}, 0.0};
  if (const auto v = advance(state, Observable::log_derivative(0.0))) return *v;
  const auto idx = closure_branches(x);
  if (idx.empty()) throw OrbitTerminated("point lies outside every branch domain");
  const double xd = x.to_double();
  const double first = std::log(std::fabs(branch(idx.front()).derivative(xd)));
  for (std::size_t i : idx) {
    const double other = std::log(std::fabs(branch(i).derivative(xd)));
    if (std::fabs(other - first) > 1e-12 * std::max(1.0, std::fabs(first))) {
      throw OrbitTerminated("log-derivative has different one-sided limits at this endpoint");
    }
  }
  return first;
}

std::vector<std::size_t> IntervalMap::closure_branches(const ExactPoint& x) const {
  std::vector<std::size_t> out;
  const mpq_class q = x.to_rational();
  const std::size_t count = branch_count().value_or(enumeration_limit());
  for (std::size_t i = first_index(); i < first_index() + count; ++i) {
    const Branch b = branch(i);
    if (q >= b.lo() && q <= b.hi()) out.push_back(i);
  }
  return out;
}

double IntervalMap::log_derivative(double x) const {
  if (!std::isfinite(x)) throw OrbitTerminated("non-finite point");
  return log_derivative(ExactPoint::from_double(x));
}

ConditionReport IntervalMap::verify_conditions(std::size_t probe_count) const {
  return verify_conditions(probe_count, expansion_power());
}

ConditionReport IntervalMap::verify_conditions(std::size_t probe_count, int power) const {
  ConditionReport rep;
  rep.expansion_power = power;
  rep.expansion_constant = expansion_constant();
  rep.renyi_bound = renyi_bound();
  if (probe_count == 0) probe_count = 1;

  std::vector<Branch> branches;
  const std::size_t first = first_index();
  const std::size_t count = enumeration_limit();
  branches.reserve(count);
  for (std::size_t i = 0; i < count; ++i) branches.push_back(branch(first + i));
  rep.branches_checked = branches.size();

  // (a): disjoint interiors, lengths adding up to the unit interval. For an
  // infinite family the unchecked branches tile [0, min lo].
  std::vector<std::pair<mpq_class, mpq_class>> domains;
  for (const auto& br : branches) domains.emplace_back(br.lo(), br.hi());
  std::sort(domains.begin(), domains.end());
  bool disjoint = true;
  mpq_class total = 0;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    total += domains[i].second - domains[i].first;
    if (i > 0 && domains[i].first < domains[i - 1].second) disjoint = false;
  }
  const mpq_class lo_all = domains.front().first;
  const mpq_class hi_all = domains.back().second;
  if (!branch_count()) total += lo_all;
  rep.partition_ok = disjoint && total == 1 && lo_all >= 0 && hi_all <= 1;

  // (c): every image covers every domain.
  const mpq_class cover_lo = branch_count() ? lo_all : mpq_class(0);
  bool markov = true;
  for (const auto& br : branches) {
    const auto [u, v] = br.image();
    if (u > cover_lo || v < hi_all) markov = false;
  }
  rep.markov_ok = markov;

  // (d) and (e) on a probe grid interior to each branch.
  double min_expansion = std::numeric_limits<double>::infinity();
  double max_renyi = 0.0;
  for (const auto& br : branches) {
    const double lo = br.lo_d();
    const double hi = br.hi_d();
    for (std::size_t j = 0; j < probe_count; ++j) {
      const double x = lo + (hi - lo) * (static_cast<double>(j) + 0.5) /
                                static_cast<double>(probe_count);
      const double d1 = std::fabs(br.derivative(x));
      max_renyi = std::max(max_renyi, std::fabs(br.second_derivative(x)) / (d1 * d1));
      double y = x;
      double jac = 1.0;
      bool ok = true;
      for (int k = 0; k < power; ++k) {
        try {
          const ExactPoint p = ExactPoint::from_double(y);
          const auto idx = locate(p);
          if (!idx) {
            ok = false;
            break;
          }
          const Branch b = branch(*idx);
          jac *= std::fabs(b.derivative(y));
          y = b.forward(y);
        } catch (const std::exception&) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      ++rep.probes;
      min_expansion = std::min(min_expansion, jac);
    }
  }
  rep.min_expansion = min_expansion;
  rep.max_renyi = max_renyi;
  rep.expansion_ok = rep.probes > 0 && min_expansion >= expansion_constant() &&
                     expansion_constant() > 1.0;
  rep.renyi_ok = max_renyi <= renyi_bound();
  return rep;
}

// ---- Gauss map --------------------------------------------------------------

Branch GaussMap::branch(std::size_t k) const {
  if (k == 0) throw std::out_of_range("Gauss branches are indexed from 1");
  const mpz_class kk(static_cast<unsigned long>(k));
  return Branch(mpq_class(1, kk + 1), mpq_class(1, kk), Mobius{-kk, 1, 1, 0});
}

std::optional<std::size_t> GaussMap::locate(const ExactPoint& x) const {
  if (sgn(x.num) <= 0 || cmp(x.num, x.den) >= 0) return std::nullopt;
  mpz_class q;
  mpz_class r;
  mpz_tdiv_qr(q.get_mpz_t(), r.get_mpz_t(), x.den.get_mpz_t(), x.num.get_mpz_t());
  if (sgn(r) == 0) return std::nullopt;  // x = 1/k
  if (!q.fits_ulong_p()) return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(q.get_ui());
}

std::vector<std::size_t> GaussMap::closure_branches(const ExactPoint& x) const {
  if (sgn(x.num) <= 0 || cmp(x.num, x.den) > 0) return {};
  mpz_class q;
  mpz_class r;
  mpz_tdiv_qr(q.get_mpz_t(), r.get_mpz_t(), x.den.get_mpz_t(), x.num.get_mpz_t());
  if (!q.fits_ulong_p()) return {};
  const auto k = static_cast<std::size_t>(q.get_ui());
  if (sgn(r) != 0) return {k};
  // x = 1/k sits between branches k and k - 1.
  if (k == 1) return {1};
  return {k - 1, k};
}

double GaussMap::bits_per_step() const { return kTwoLevy / std::numbers::ln2; }

std::optional<double> GaussMap::advance(OrbitState& state, const Observable& f) const {
  ExactPoint& x = state.point;
  if (sgn(x.num) <= 0 || cmp(x.num, x.den) >= 0) return std::nullopt;
  mpz_tdiv_qr(state.quotient.get_mpz_t(), state.scratch.get_mpz_t(), x.den.get_mpz_t(),
              x.num.get_mpz_t());
  if (sgn(state.scratch) == 0) return std::nullopt;
  double value = 0.0;
  if (f.is_log_derivative()) {
    // |G'(x)| = x^-2
    value = 2.0 * (log_abs(x.den) - log_abs(x.num));
  } else {
    value = f(x.to_double());
  }
  state.last_digit = state.quotient.get_d();
  // (num, den) -> (den mod num, num)
  x.den.swap(x.num);
  x.num.swap(state.scratch);
  return value;
}

// ---- finite maps ------------------------------------------------------------

FiniteMap::FiniteMap(std::string id, std::vector<Branch> branches, int power, double lambda,
                     double renyi)
    : IntervalMap(power, lambda, renyi), id_(std::move(id)), branches_(std::move(branches)) {
  if (branches_.empty()) throw ConfigError("finite map needs at least one branch");
  std::sort(branches_.begin(), branches_.end(),
            [](const Branch& l, const Branch& r) { return l.lo() < r.lo(); });
  double max_slope = 2.0;
  bool lebesgue = true;
  for (const auto& br : branches_) {
    const Mobius& m = br.mobius();
    if (sgn(m.c) != 0 || abs(m.d) != 1) integer_affine_ = false;
    if (sgn(m.c) != 0) lebesgue = false;
    const auto [u, v] = br.image();
    if (u != 0 || v != 1) lebesgue = false;
    max_slope = std::max({max_slope, std::fabs(br.derivative(br.lo_d())),
                          std::fabs(br.derivative(br.hi_d()))});
  }
  preserves_lebesgue_ = lebesgue;
  bits_per_step_ = std::max(1.0, std::log2(max_slope));
}

std::optional<std::size_t> FiniteMap::locate(const ExactPoint& x) const {
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    if (branches_[i].contains_interior(x)) return i;
  }
  return std::nullopt;
}

std::optional<double> FiniteMap::advance(OrbitState& state, const Observable& f) const {
  const auto idx = locate(state.point);
  if (!idx) return std::nullopt;
  const Mobius& m = branches_[*idx].mobius();
  ExactPoint& x = state.point;
  double value = 0.0;
  if (f.is_log_derivative()) {
    if (sgn(m.c) == 0) {
      value = log_abs(m.determinant()) - 2.0 * log_abs(m.d);
    } else {
      mpz_class den = m.c * x.num + m.d * x.den;
      value = log_abs(m.determinant()) - 2.0 * (log_abs(den) - log_abs(x.den));
    }
  } else {
    value = f(x.to_double());
  }
  state.last_digit = std::numeric_limits<double>::quiet_NaN();
  if (integer_affine_) {
    // den is unchanged up to the sign of d
    state.scratch = m.b * x.den;
    x.num *= m.a;
    x.num += state.scratch;
    if (sgn(m.d) < 0) x.num = -x.num;
    return value;
  }
  mpz_class num = m.a * x.num + m.b * x.den;
  mpz_class den = m.c * x.num + m.d * x.den;
  if (sgn(den) < 0) {
    num = -num;
    den = -den;
  }
  mpz_gcd(state.scratch.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (state.scratch > 1) {
    mpz_divexact(num.get_mpz_t(), num.get_mpz_t(), state.scratch.get_mpz_t());
    mpz_divexact(den.get_mpz_t(), den.get_mpz_t(), state.scratch.get_mpz_t());
  }
  x.num = std::move(num);
  x.den = std::move(den);
  return value;
}

// ---- Birkhoff sums ----------------------------------------------------------

BirkhoffResult birkhoff_orbit(const IntervalMap& map, const Observable& f, const ExactPoint& x,
                              std::size_t n) {
  OrbitState state{x, {}, {}, 0.0};
  CompensatedSum sum;
  for (std::size_t k = 0; k < n; ++k) {
    const auto v = map.advance(state, f);
    if (!v) {
      throw PartialOrbitError("orbit terminated after " + std::to_string(k) + " of " +
                                  std::to_string(n) + " steps",
                              k);
    }
    sum.add(*v);
  }
  return {sum.value(), std::move(state.point)};
}

double birkhoff_sum(const IntervalMap& map, const Observable& f, const ExactPoint& x,
                    std::size_t n) {
  return birkhoff_orbit(map, f, x, n).sum;
}

double birkhoff_sum(const IntervalMap& map, const Observable& f, double x, std::size_t n) {
  if (!std::isfinite(x)) throw OrbitTerminated("non-finite point");
  return birkhoff_orbit(map, f, ExactPoint::from_double(x), n).sum;
}

}  // namespace birkhoff

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "birkhoff/errors.hpp"
#include "birkhoff/interval_map.hpp"
#include "birkhoff/numeric.hpp"

namespace birkhoff {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

mpq_class rational_arg(const std::string& text, const std::string& id) {
  try {
    return parse_rational(text);
  } catch (const std::invalid_argument&) {
    throw ConfigError("map '" + id + "': bad rational literal '" + text + "'");
  }
}

// Scales rational coefficients to a primitive integer Mobius matrix with d >= 0.
Mobius integer_mobius(const mpq_class& a, const mpq_class& b, const mpq_class& c,
                      const mpq_class& d) {
  mpz_class l = 1;
  for (const mpq_class* q : {&a, &b, &c, &d}) {
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q->get_den().get_mpz_t());
  }
  auto scale = [&](const mpq_class& q) { return mpz_class(q.get_num() * (l / q.get_den())); };
  Mobius m{scale(a), scale(b), scale(c), scale(d)};
  mpz_class g = 0;
  for (const mpz_class* z : {&m.a, &m.b, &m.c, &m.d}) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), z->get_mpz_t());
  }
  if (g > 1) {
    m.a /= g;
    m.b /= g;
    m.c /= g;
    m.d /= g;
  }
  if (sgn(m.d) < 0 || (sgn(m.d) == 0 && sgn(m.c) < 0)) {
    m.a = -m.a;
    m.b = -m.b;
    m.c = -m.c;
    m.d = -m.d;
  }
  return m;
}

std::shared_ptr<const IntervalMap> finite_from_branches(const std::string& id,
                                                        std::vector<Branch> branches) {
  double lambda = std::numeric_limits<double>::infinity();
  double renyi = 0.0;
  for (const auto& br : branches) {
    // |T'| and |T''|/|T'|^2 = 2|c||cx+d|/|ad-bc| are monotone on a pole-free domain.
    for (double x : {br.lo_d(), br.hi_d()}) {
      const double d1 = std::fabs(br.derivative(x));
      lambda = std::min(lambda, d1);
      renyi = std::max(renyi, std::fabs(br.second_derivative(x)) / (d1 * d1));
    }
  }
  return std::make_shared<FiniteMap>(id, std::move(branches), 1, lambda, renyi);
}

}  // namespace

std::shared_ptr<const IntervalMap> make_map(const std::string& id) {
  if (id == "gauss") return std::make_shared<GaussMap>();
  if (id == "binary") {
    std::vector<Branch> br;
    br.emplace_back(mpq_class(0), mpq_class(1, 2), Mobius{2, 0, 0, 1});
    br.emplace_back(mpq_class(1, 2), mpq_class(1), Mobius{2, -1, 0, 1});
    return std::make_shared<FiniteMap>("binary", std::move(br), 1, 2.0, 0.0);
  }
  const std::string affine_prefix = "finite:affine:";
  const std::string mobius_prefix = "finite:mobius:";
  if (id.rfind(affine_prefix, 0) == 0) {
    const auto parts = split(id.substr(affine_prefix.size()), ',');
    if (parts.size() < 3) throw ConfigError("map '" + id + "': needs at least two branches");
    std::vector<mpq_class> edges;
    for (const auto& p : parts) edges.push_back(rational_arg(p, id));
    std::vector<Branch> br;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const mpq_class w = edges[i + 1] - edges[i];
      if (sgn(w) <= 0) throw ConfigError("map '" + id + "': edges must increase");
      // x -> (x - e_i) / w
      br.emplace_back(edges[i], edges[i + 1],
                      integer_mobius(mpq_class(1) / w, -edges[i] / w, 0, 1));
    }
    return finite_from_branches(id, std::move(br));
  }
  if (id.rfind(mobius_prefix, 0) == 0) {
    std::vector<Branch> br;
    for (const auto& spec : split(id.substr(mobius_prefix.size()), ';')) {
      const auto f = split(spec, ',');
      if (f.size() != 6) {
        throw ConfigError("map '" + id + "': each branch needs lo,hi,a,b,c,d");
      }
      br.emplace_back(rational_arg(f[0], id), rational_arg(f[1], id),
                      integer_mobius(rational_arg(f[2], id), rational_arg(f[3], id),
                                     rational_arg(f[4], id), rational_arg(f[5], id)));
    }
    return finite_from_branches(id, std::move(br));
  }
  throw ConfigError("unknown map id '" + id + "'");
}

Observable make_observable(const std::string& id, const IntervalMap& map) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool gauss = map.id() == "gauss";
  const bool lebesgue = map.preserves_lebesgue();
  if (id == "log_derivative") {
    double mean = nan;
    if (gauss) {
      mean = kTwoLevy;
    } else if (lebesgue) {
      // Lebesgue-invariant full affine map: sum of w log(1/w) over branch widths.
      mean = 0.0;
      for (std::size_t i = 0; i < *map.branch_count(); ++i) {
        const Branch br = map.branch(i);
        const double w = mpq_class(br.hi() - br.lo()).get_d();
        mean -= w * std::log(w);
      }
    }
    return Observable::log_derivative(mean);
  }
  if (id == "centered_bit") {
    const double mean = gauss ? std::log(1.5) / std::numbers::ln2 - 0.5 : (lebesgue ? 0.0 : nan);
    return Observable::function(id, [](double x) { return x < 0.5 ? 0.5 : -0.5; }, mean);
  }
  if (id == "zero") return Observable::function(id, [](double) { return 0.0; }, 0.0);
  if (id == "identity") {
    const double mean = gauss ? 1.0 / std::numbers::ln2 - 1.0 : (lebesgue ? 0.5 : nan);
    return Observable::function(id, [](double x) { return x; }, mean);
  }
  const std::string constant_prefix = "constant:";
  if (id.rfind(constant_prefix, 0) == 0) {
    double c = 0.0;
    try {
      std::size_t used = 0;
      const std::string arg = id.substr(constant_prefix.size());
      c = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw ConfigError("observable '" + id + "': bad constant");
    }
    return Observable::function(id, [c](double) { return c; }, c);
  }
  throw ConfigError("unknown observable id '" + id + "'");
}

}  // namespace birkhoff

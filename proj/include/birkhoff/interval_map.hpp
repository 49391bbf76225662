#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/exact.hpp"

namespace birkhoff {

// Integer Mobius transformation x -> (a x + b) / (c x + d). Rational
// coefficients are represented by scaling to a common denominator, which does
// not change the map.
struct Mobius {
  mpz_class a, b, c, d;

  mpz_class determinant() const { return a * d - b * c; }
  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  double inverse(double y) const;
  mpq_class operator()(const mpq_class& x) const;
};

// One monotone full branch: a Mobius map on a closed interval of [0, 1].
// Points on the domain boundary are treated as orbit terminations.
class Branch {
 public:
  Branch(mpq_class lo, mpq_class hi, Mobius map);

  const mpq_class& lo() const { return lo_; }
  const mpq_class& hi() const { return hi_; }
  const Mobius& mobius() const { return map_; }
  double lo_d() const { return lo_d_; }
  double hi_d() const { return hi_d_; }

  double forward(double x) const { return map_(x); }
  double derivative(double x) const { return map_.derivative(x); }
  double second_derivative(double x) const { return map_.second_derivative(x); }
  double inverse(double y) const { return map_.inverse(y); }

  // Closure of the image, as an exact interval.
  std::pair<mpq_class, mpq_class> image() const;

  // Sign of x - lo and x - hi for an exact point.
  bool contains_interior(const ExactPoint& x) const;

 private:
  mpq_class lo_;
  mpq_class hi_;
  Mobius map_;
  double lo_d_;
  double hi_d_;
};

// Per-orbit workspace: the current exact point plus scratch storage, so the
// hot loop does not allocate.
struct OrbitState {
  ExactPoint point;
  mpz_class scratch;
  mpz_class quotient;
  // Continued-fraction digit consumed by the last Gauss step (NaN otherwise).
  double last_digit = 0.0;
};

class IntervalMap;

// Real-valued observable. The log-derivative observable log|T'| is evaluated
// from the branch Jacobian on exact points instead of through a double
// function, which keeps it accurate for points extremely close to 0.
class Observable {
 public:
  static Observable log_derivative(double mean);
  static Observable function(std::string name, std::function<double(double)> eval, double mean);

  const std::string& name() const { return name_; }
  double mean() const { return mean_; }
  bool is_log_derivative() const { return log_derivative_; }

  double operator()(double x) const { return eval_(x); }

  Observable with_mean(double mean) const {
    Observable copy = *this;
    copy.mean_ = mean;
    return copy;
  }

 private:
  std::string name_;
  std::function<double(double)> eval_;
  double mean_ = 0.0;
  bool log_derivative_ = false;
};

struct ConditionReport {
  int expansion_power = 1;
  double expansion_constant = 1.0;
  double renyi_bound = 0.0;
  std::size_t branches_checked = 0;
  std::size_t probes = 0;
  double min_expansion = 0.0;   // min sampled |(T^p)'|
  double max_renyi = 0.0;       // max sampled |T''| / |T'|^2
  bool partition_ok = false;    // condition (a) on the checked branches
  bool markov_ok = false;       // every image covers every domain
  bool expansion_ok = false;
  bool renyi_ok = false;
  bool passes() const { return partition_ok && markov_ok && expansion_ok && renyi_ok; }
};

// Expanding Markov interval map with countably many full Mobius branches.
// Immutable after construction; safe to share between threads.
class IntervalMap {
 public:
  virtual ~IntervalMap() = default;

  virtual std::string id() const = 0;
  // Number of branches, or nullopt for an infinite family.
  virtual std::optional<std::size_t> branch_count() const = 0;
  // Branch by index; indices start at 1 for the Gauss family, 0 otherwise.
  virtual Branch branch(std::size_t index) const = 0;
  // Branch index containing x in its interior, nullopt on endpoints or outside.
  virtual std::optional<std::size_t> locate(const ExactPoint& x) const = 0;
  virtual std::size_t first_index() const { return 0; }
  // Branch list used by enumeration-style checks of infinite families.
  virtual std::size_t enumeration_limit() const { return branch_count().value_or(1); }

  int expansion_power() const { return expansion_power_; }
  double expansion_constant() const { return expansion_constant_; }
  double renyi_bound() const { return renyi_bound_; }
  // Binary digits of resolution consumed per iterate, used to size sample points.
  virtual double bits_per_step() const = 0;
  // True when Lebesgue measure is invariant (full affine branches).
  virtual bool preserves_lebesgue() const { return false; }

  // T(x) in double precision. Throws OrbitTerminated at endpoints.
  double apply(double x) const;
  // T(x) exactly. Throws OrbitTerminated at endpoints.
  ExactPoint apply(const ExactPoint& x) const;
  // log|T'(x)|. At a branch endpoint this is the common one-sided limit when
  // the adjacent branches agree there; otherwise throws OrbitTerminated.
  double log_derivative(double x) const;
  double log_derivative(const ExactPoint& x) const;

  // Evaluates f at the current point and moves the state to T(x). Returns
  // nullopt (state unchanged) when the point is not in a branch interior.
  virtual std::optional<double> advance(OrbitState& state, const Observable& f) const;

  ConditionReport verify_conditions(std::size_t probe_count) const;
  ConditionReport verify_conditions(std::size_t probe_count, int power) const;

  // Indices of the branches whose closed domain contains x.
  virtual std::vector<std::size_t> closure_branches(const ExactPoint& x) const;

 protected:
  IntervalMap(int power, double lambda, double renyi)
      : expansion_power_(power), expansion_constant_(lambda), renyi_bound_(renyi) {}

 private:
  int expansion_power_;
  double expansion_constant_;
  double renyi_bound_;
};

// G(x) = 1/x - floor(1/x); branch k lives on [1/(k+1), 1/k].
class GaussMap final : public IntervalMap {
 public:
  GaussMap() : IntervalMap(2, 4.0, 2.0) {}
  std::string id() const override { return "gauss"; }
  std::optional<std::size_t> branch_count() const override { return std::nullopt; }
  Branch branch(std::size_t k) const override;
  std::optional<std::size_t> locate(const ExactPoint& x) const override;
  std::size_t first_index() const override { return 1; }
  std::size_t enumeration_limit() const override { return 256; }
  double bits_per_step() const override;
  std::optional<double> advance(OrbitState& state, const Observable& f) const override;
  std::vector<std::size_t> closure_branches(const ExactPoint& x) const override;
};

// Finitely many full Mobius branches listed explicitly.
class FiniteMap final : public IntervalMap {
 public:
  FiniteMap(std::string id, std::vector<Branch> branches, int power, double lambda,
            double renyi);
  std::string id() const override { return id_; }
  std::optional<std::size_t> branch_count() const override { return branches_.size(); }
  Branch branch(std::size_t index) const override { return branches_.at(index); }
  std::optional<std::size_t> locate(const ExactPoint& x) const override;
  double bits_per_step() const override { return bits_per_step_; }
  bool preserves_lebesgue() const override { return preserves_lebesgue_; }
  std::optional<double> advance(OrbitState& state, const Observable& f) const override;

 private:
  std::string id_;
  std::vector<Branch> branches_;
  double bits_per_step_ = 1.0;
  bool integer_affine_ = true;
  bool preserves_lebesgue_ = false;
};

// Birkhoff sum S_n f(x) = sum_{k<n} f(T^k x). Throws PartialOrbitError
// carrying the number of surviving steps when the orbit ends early.
struct BirkhoffResult {
  double sum = 0.0;
  ExactPoint endpoint;  // T^n x
};
BirkhoffResult birkhoff_orbit(const IntervalMap& map, const Observable& f, const ExactPoint& x,
                              std::size_t n);
double birkhoff_sum(const IntervalMap& map, const Observable& f, const ExactPoint& x,
                    std::size_t n);
double birkhoff_sum(const IntervalMap& map, const Observable& f, double x, std::size_t n);

// ---- registry -------------------------------------------------------------

// "gauss", "binary", "finite:affine:<e0>,<e1>,...,<em>" (full increasing affine
// branches on the given partition) or "finite:mobius:<lo>,<hi>,<a>,<b>,<c>,<d>;..."
// with rational literals. Throws ConfigError on an unknown or malformed id.
std::shared_ptr<const IntervalMap> make_map(const std::string& id);

// "log_derivative", "centered_bit" (1[x<1/2] - 1/2), "zero", "identity",
// "constant:<c>". The mean is the invariant-measure integral when it is known
// in closed form for this map, otherwise NaN (the caller supplies or estimates it).
Observable make_observable(const std::string& id, const IntervalMap& map);

}  // namespace birkhoff

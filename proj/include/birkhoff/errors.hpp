#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace birkhoff {

// Base for every error raised by the library. Subclasses map onto CLI exit
// codes: configuration problems exit 2, numerical/certification problems
// exit 3, cache problems exit 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

// Numerical failures: anything a solver or certifier could not establish.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvexityViolation : public SolverError {
 public:
  using SolverError::SolverError;
};

class ConsistencyError : public SolverError {
 public:
  using SolverError::SolverError;
};

// Requested value lies outside the window the solver can reach.
class RangeError : public NumericalError {
 public:
  RangeError(const std::string& what, double lo, double hi)
      : NumericalError(what), lo_(lo), hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

class TailCertificationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IntegrityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PreconditionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Fewer certified continued-fraction digits than requested.
class PrecisionExhausted : public NumericalError {
 public:
  PrecisionExhausted(const std::string& what, std::size_t certified)
      : NumericalError(what), certified_(certified) {}
  std::size_t certified() const { return certified_; }

 private:
  std::size_t certified_;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

// A point hit a branch endpoint or left every branch domain.
class OrbitTerminated : public Error {
 public:
  using Error::Error;
};

// An orbit ended before the requested number of steps.
class PartialOrbitError : public Error {
 public:
  PartialOrbitError(const std::string& what, std::size_t survived)
      : Error(what), survived_(survived) {}
  std::size_t survived() const { return survived_; }

 private:
  std::size_t survived_;
};

}  // namespace birkhoff

#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

// Every error raised by the library derives from Error so callers (the
// harness in particular) can record a failure without crashing.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-facing configuration (jet order out of range, unknown family, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition (e.g. extracting a partial of
// higher order than the jet carries).
class ContractError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

// (x, y) outside the chart domain or the admissible cone.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// A least-squares scalar (lambda, tau) has an all-zero coefficient system.
class IndeterminateError : public Error {
 public:
  using Error::Error;
};

// A model does not have the algebraic structure an operation assumes.
class StructureError : public Error {
 public:
  using Error::Error;
};

class ConstraintError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

}  // namespace finsler

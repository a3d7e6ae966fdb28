#pragma once

#include <stdexcept>
#include <string>

namespace pdgd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (bad sizes, non-positive steps, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Block sizes of a state or matrix do not match the problem.
class DimensionError : public PreconditionError {
 public:
  DimensionError(const std::string& block, long expected, long actual)
      : PreconditionError("dimension mismatch in block '" + block + "': expected " +
                          std::to_string(expected) + ", got " + std::to_string(actual)),
        block_(block) {}

  const std::string& block() const { return block_; }

 private:
  std::string block_;
};

/// An analytic oracle disagrees with finite differences, or violates symmetry.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Integration or iteration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double at) : Error(what), at_(at) {}

  /// Time (continuous flow) or iteration index (discrete run) of the blow-up.
  double at() const { return at_; }

 private:
  double at_;
};

/// The KKT system has no solution (no finite optimum).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// Certificate construction or parameter search failed.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// Two routes that must agree (direct vs printed block forms) did not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Rate fitting could not be carried out on the given samples.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdgd

#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace h2impact {

namespace detail {
// Compact value formatting for diagnostics; error messages routinely carry
// magnitudes from 1e-16 to 1e16 where fixed-point notation is unreadable.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace detail

// Exit codes used by the CLI. Library exceptions map onto these so that a
// caller embedding the library can reproduce the same contract.
enum class ExitCode : int {
  Ok = 0,
  Unstable = 2,
  ConfigError = 3,
  PreconditionError = 4,
  NumericError = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Requested closed loop is not exponentially stable. Carries the spectral
// abscissa so callers can report how far from stability the loop sits.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double abscissa)
      : Error(ExitCode::Unstable, what), abscissa_(abscissa) {}
  double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_ = 0.0;
};

// Malformed configuration input (bad JSON, missing keys, dimension
// mismatches inside a config document, non-stabilizing gains).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::ConfigError, what) {}
};

// An operation was called outside its documented domain (dimension
// mismatch between arguments, invalid option value, degenerate inputs).
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ExitCode::PreconditionError, what) {}
};

// A numeric kernel could not deliver a trustworthy answer (singular
// Lyapunov operator, ill-conditioned eigenbasis, divergent iteration).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ExitCode::NumericError, what) {}
};

}  // namespace h2impact

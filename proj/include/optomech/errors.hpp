#pragma once

#include <stdexcept>
#include <string>

namespace optomech {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A physical or numerical argument was outside its valid domain.
struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Two spectra with incompatible unit tags were combined, or a unit tag
// did not match the one an operation requires.
struct UnitError : Error {
  explicit UnitError(const std::string& msg) : Error(msg) {}
};

// Configuration file problems: syntax, unknown keys, invariant violations.
struct ConfigError : Error {
  ConfigError(const std::string& msg, int line_number = 0)
      : Error(line_number > 0 ? msg + " (line " + std::to_string(line_number) + ")" : msg),
        line(line_number) {}
  int line = 0;
};

// File I/O problems.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// A least-squares fit failed to produce a usable result.
struct FitError : Error {
  FitError(const std::string& msg, double residual = 0.0, int iters = 0)
      : Error(msg), residual_norm(residual), iterations(iters) {}
  double residual_norm = 0.0;
  int iterations = 0;
};

}  // namespace optomech

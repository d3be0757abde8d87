#pragma once

#include <stdexcept>
#include <string>

namespace heom {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad parameters, malformed files, unknown models.
// The CLI maps these to exit code 1.
struct UsageError : Error {
  using Error::Error;
};

// Structured parse failure in a text file; line numbers are 1-based.
struct ParseError : UsageError {
  ParseError(const std::string& path, long line, const std::string& message)
      : UsageError(path + ":" + std::to_string(line) + ": " + message),
        path(path),
        line(line) {}
  std::string path;
  long line = 0;
};

// External trajectory import rejected the file (layout mismatch or a state
// violating trace/Hermiticity beyond the import tolerance).
struct ImportError : UsageError {
  using UsageError::UsageError;
};

// Sweep manifest construction or parsing failed (duplicate triples, bad rows).
struct ManifestError : UsageError {
  using UsageError::UsageError;
};

// Matsubara pole condition violated: some nu_k coincides with gamma.
struct DegenerateParametersError : UsageError {
  using UsageError::UsageError;
};

// Hierarchy index count exceeds the configured memory budget.
struct CapacityError : UsageError {
  CapacityError(std::size_t count, std::size_t budget, const std::string& message)
      : UsageError(message), count(count), budget(budget) {}
  std::size_t count = 0;
  std::size_t budget = 0;
};

// Numerical quadrature could not reach the requested tolerance.
struct QuadratureError : Error {
  using Error::Error;
};

// A density matrix failed validation (eigenvalue below the clamping window,
// broken Hermiticity, all-zero matrix, invalid site pair).
struct InvalidStateError : Error {
  using Error::Error;
};

// Propagation produced NaN/Inf or broke a conservation law.
// The CLI maps this to exit code 2.
struct DivergenceError : Error {
  DivergenceError(double t_fs, const std::string& message)
      : Error(message), t_fs(t_fs) {}
  double t_fs = 0.0;
};

// The convergence ladder exhausted its budget before reaching tolerance.
// The CLI maps this to exit code 3.
struct ConvergenceBudgetError : Error {
  ConvergenceBudgetError(double last_delta, const std::string& message)
      : Error(message), last_delta(last_delta) {}
  double last_delta = 0.0;
};

}  // namespace heom

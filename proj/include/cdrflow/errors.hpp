#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdrflow {

// Base of every error thrown by the library. The CLI maps the three
// families below onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, unknown config keys, invalid hyper-parameters.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Anything wrong with input data: unreadable files, malformed lines,
// empty datasets, infeasible splits, unknown users.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : DataError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Solver divergence, failed implicit solves, SVD breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(int step, const std::string& what)
      : NumericalError("non-finite state at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

class ImplicitSolveError : public NumericalError {
 public:
  ImplicitSolveError(int iterations, double residual)
      : NumericalError("Adams-Moulton fixed-point iteration did not converge after " +
                       std::to_string(iterations) + " iterations (last update " +
                       std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace cdrflow

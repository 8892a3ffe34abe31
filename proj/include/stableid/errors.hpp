#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stableid {

/// Operand shapes do not agree (vector lengths, variable counts, trajectory lengths).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A moment of scalar degree `degree` needs at least that many independent experiments.
class InsufficientExperiments : public std::invalid_argument {
 public:
  InsufficientExperiments(int degree, std::size_t experiments)
      : std::invalid_argument("insufficient experiments: moment of degree " +
                              std::to_string(degree) + " needs at least " +
                              std::to_string(degree) + " experiments, data set has " +
                              std::to_string(experiments)),
        degree_(degree),
        experiments_(experiments) {}

  int degree() const noexcept { return degree_; }
  std::size_t experiments() const noexcept { return experiments_; }

 private:
  int degree_;
  std::size_t experiments_;
};

/// Malformed input file. Line and column are 1-based; 0 means unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ", column " +
                                      std::to_string(column) + ")"
                                : what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Damped Newton iteration for e(x) = target did not reach its residual tolerance.
class NewtonFailure : public std::runtime_error {
 public:
  NewtonFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A step failed while simulating; carries the time index of the failed step.
class SimulationFailure : public std::runtime_error {
 public:
  SimulationFailure(std::size_t t, double residual)
      : std::runtime_error("simulation failed at t=" + std::to_string(t) +
                           " (final Newton residual " + std::to_string(residual) + ")"),
        t_(t),
        residual_(residual) {}
  std::size_t time_index() const noexcept { return t_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t t_;
  double residual_;
};

/// An identity has a monomial that no product of two Gram basis elements produces.
class GramSpanError : public std::runtime_error {
 public:
  GramSpanError(const std::string& identity, const std::string& monomial)
      : std::runtime_error("identity '" + identity + "': monomial " + monomial +
                           " is outside the span of the Gram basis products"),
        monomial_(monomial) {}
  const std::string& monomial() const noexcept { return monomial_; }

 private:
  std::string monomial_;
};

/// The identification problem has no feasible point or the backend failed.
class IdentificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stableid

#ifndef NSMPC_ERRORS_HPP
#define NSMPC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nsmpc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes that do not agree with the problem dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The requested operation is not provided by a regularizer or residual model.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A rollout or costate pass produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t stage)
      : Error(what + " (stage " + std::to_string(stage) + ")"), stage_(stage) {}
  std::size_t stage() const noexcept { return stage_; }

 private:
  std::size_t stage_;
};

/// Non-finite Jacobian entry.
class JacobianError : public Error {
 public:
  JacobianError(std::size_t row, std::size_t col)
      : Error("non-finite Jacobian entry at (" + std::to_string(row) + ", " +
              std::to_string(col) + ")"),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// LU factorization hit a pivot that is zero to working tolerance.
class SingularMatrixError : public Error {
 public:
  explicit SingularMatrixError(std::size_t pivot)
      : Error("matrix is singular to working precision at pivot " +
              std::to_string(pivot)),
        pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Newton initialization did not reach the requested tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Invalid configuration value; carries the offending field name.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace nsmpc

#endif  // NSMPC_ERRORS_HPP

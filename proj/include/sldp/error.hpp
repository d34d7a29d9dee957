#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sldp {

/// Precondition violations: bad sizes, bad step sizes, malformed configs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point that was required to lie in the closed computational box does not.
class OutOfDomain : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failures: non-convergence, non-finite data.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, double last_residual, int iterations)
      : NumericalError(what), last_residual_(last_residual), iterations_(iterations) {}

  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

/// Brute-force enumeration would exceed the configured sequence budget.
class EnumerationLimit : public InvalidArgument {
 public:
  EnumerationLimit(const std::string& what, double sequence_count)
      : InvalidArgument(what), sequence_count_(sequence_count) {}

  double sequence_count() const noexcept { return sequence_count_; }

 private:
  double sequence_count_;
};

/// Syntax and semantic errors in the expression language. `position` is a
/// 0-based character offset into the source text, or npos when not applicable.
class ExpressionError : public InvalidArgument {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ExpressionError(const std::string& what, std::size_t position = npos)
      : InvalidArgument(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace sldp

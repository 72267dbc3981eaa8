#pragma once

#include <stdexcept>
#include <string>

namespace bilgr {

/// Invalid argument ranges (generator parameters, configs, fractions).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Node id or class label outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Value outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller broke a structural precondition (shape mismatch, non-symmetric input).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative method failed or produced non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Input is valid but degenerate (all nodes score identically, single-class labels).
/// Only thrown when callers ask for strict handling; otherwise reported as a warning.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bilgr

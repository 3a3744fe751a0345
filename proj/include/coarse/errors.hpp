#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coarse {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// log of a zero-mass cell, or similar evaluation outside the objective's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A finite oracle ran out of examples before the query finished.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(const std::string& what, std::size_t samples_drawn)
      : std::runtime_error(what), samples_drawn_(samples_drawn) {}
  std::size_t samples_drawn() const noexcept { return samples_drawn_; }

 private:
  std::size_t samples_drawn_;
};

// Rejection sampling found no point of the cell within the draw cap.
class LowMassCell : public std::runtime_error {
 public:
  LowMassCell(const std::string& what, double rate_bound)
      : std::runtime_error(what), rate_bound_(rate_bound) {}
  // Upper bound on the cell's Gaussian mass implied by the failed draws.
  double rate_bound() const noexcept { return rate_bound_; }

 private:
  double rate_bound_;
};

class PartitionInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGraph : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file or configuration. line/column are 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    return what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")";
  }
  std::size_t line_;
  std::size_t column_;
};

}  // namespace coarse

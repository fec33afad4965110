#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace pwtab {

// Invalid argument or parameter outside the operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The pseudo-outcome sample has zero variance; the statistic is undefined.
class DegenerateVarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cross-fitting could not produce folds with both treatment arms.
class FoldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based data row (0 for the header) and
// the offending column name, when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace pwtab

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flaremap {

/// Malformed input text. `line()` is 1-based and counts the header row.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parameter or data-shape violation detected before any computation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A metric precondition failed for one or more points (zero or constant vectors).
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, std::vector<std::string> offenders = {})
      : std::domain_error(what), offenders_(std::move(offenders)) {}
  const std::vector<std::string>& offenders() const noexcept { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

/// Unknown entity / category id.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Regression design is rank deficient; `columns()` names the dependent columns.
class RankError : public std::runtime_error {
 public:
  RankError(const std::string& what, std::vector<std::string> columns)
      : std::runtime_error(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

/// Internal consistency check failed. Indicates a bug, not bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A pipeline stage failed; wraps the underlying message with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace flaremap

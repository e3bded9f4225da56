#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace posedmp {

/// Raised when a quaternion map is evaluated outside the region where it is
/// a bijection (log at the antipode, exp beyond pi).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidPlan : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A merge primitive never reached its switching condition.
class StallError : public std::runtime_error {
 public:
  StallError(std::size_t primitive, double elapsed)
      : std::runtime_error("primitive " + std::to_string(primitive) +
                           " did not reach its trigger within " +
                           std::to_string(elapsed) + " s"),
        primitive_(primitive) {}
  std::size_t primitive() const { return primitive_; }

 private:
  std::size_t primitive_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what + " (line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class NonUniformSampling : public std::runtime_error {
 public:
  explicit NonUniformSampling(std::size_t row)
      : std::runtime_error("non-uniform sampling at row " +
                           std::to_string(row)),
        row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class NonUnitQuaternion : public std::runtime_error {
 public:
  NonUnitQuaternion(std::size_t row, double norm)
      : std::runtime_error("quaternion at row " + std::to_string(row) +
                           " has norm " + std::to_string(norm)),
        row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class NoSegments : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace posedmp

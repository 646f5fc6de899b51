#pragma once

#include <stdexcept>
#include <string>

namespace cavmol {

/// Invalid user input: a parameter, flag, or range that fails its contract.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed (solver breakdown, overflow, singularity).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double where = 0.0)
      : std::runtime_error(what), where_(where) {}
  /// Radial position [a0] or energy [rad/s] at which the failure occurred.
  double where() const noexcept { return where_; }

 private:
  double where_;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cavmol

#pragma once

#include <stdexcept>
#include <string>

namespace tagrl {

// Bad input: malformed files, invalid configs, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values showing up in a loss, gradient or parameter.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// The caller broke an API contract (e.g. an action outside the feasible set).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace tagrl

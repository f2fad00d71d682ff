#ifndef BNPOOD_ERRORS_HPP
#define BNPOOD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bnpood {

// Malformed files, dimension mismatches, labels out of range.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

// Runtime numerical failure (singular covariance, degenerate weights, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bnpood

#endif

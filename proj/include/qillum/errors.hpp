#pragma once

#include <stdexcept>
#include <string>

namespace qillum {

/// Thrown when a truncated representation drops more weight than allowed.
class TruncationError : public std::runtime_error {
public:
  TruncationError(const std::string& what, double deficit)
      : std::runtime_error(what), deficit_(deficit) {}
  double deficit() const noexcept { return deficit_; }

private:
  double deficit_;
};

/// Thrown for out-of-domain arguments (bad mode index, negative photon number...).
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A quadrature or truncation refinement did not settle within its budget.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double change)
      : std::runtime_error(what), change_(change) {}
  double change() const noexcept { return change_; }

private:
  double change_;
};

}  // namespace qillum

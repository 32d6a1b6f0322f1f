#pragma once

#include <stdexcept>
#include <string>

namespace pulsedeconv {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Dual certificate linear system is singular or too ill-conditioned to trust.
class ConstructionFailed : public std::runtime_error {
 public:
  explicit ConstructionFailed(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical solver failure (as opposed to an infeasible model).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pulsedeconv

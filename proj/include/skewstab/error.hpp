#pragma once

#include <stdexcept>
#include <string>

namespace skewstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A system fails one of the structural hypotheses (contraction, self-map, compatibility).
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure ran out of its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A word or atom budget would be exceeded.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace skewstab

#pragma once

#include <stdexcept>
#include <string>

namespace jamsim {

// Caller handed us something outside an operation's contract.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// An internal invariant broke (e.g. a precision matrix lost definiteness).
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace jamsim

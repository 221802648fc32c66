#pragma once

#include <stdexcept>
#include <string>

namespace sos {

/// Raised when an input breaks an operation's contract (bad parameters,
/// malformed fields, constraint-violating states).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised by facet-level analysis when no positive level holds a fraction
/// `a` of the box.
class DegenerateField : public std::domain_error {
 public:
  explicit DegenerateField(const std::string& what) : std::domain_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace detail
}  // namespace sos

#pragma once

#include <stdexcept>
#include <string>

namespace qbloch {

// Three failure classes, mapped one-to-one onto CLI exit codes 2, 3 and 4.

/// Malformed input text (JSON syntax, missing keys, wrong value types).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its contract: dimension mismatch,
/// missing window, negative level, asymmetric truncation set, ...
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Well-formed input that violates a mathematical hypothesis: lost
/// ellipticity, non-positive Jacobian, eigensolver failure.
class ValidityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a caller-supplied stop request interrupts a long estimate.
class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("operation cancelled") {}
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

}  // namespace detail
}  // namespace qbloch

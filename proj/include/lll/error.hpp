#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lll {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model data: out-of-range tuples, unsorted vbl lists, bad sizes.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// An explicit tape ran out of bits. Enumeration drivers catch this and
/// extend the branch.
class TapeExhausted : public Error {
 public:
  TapeExhausted() : Error("explicit tape exhausted") {}
  using Error::Error;
};

/// A caller-side precondition that can only be detected at run time was
/// observed to be false (e.g. q(w) >= 2r during extraction).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A computation was refused or abandoned because a configured budget
/// (bit guard, step budget, ball budget) would be exceeded.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Input file errors; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace lll

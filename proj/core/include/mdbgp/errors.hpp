#pragma once

#include <stdexcept>
#include <string>

namespace mdbgp {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files or flag/spec strings (CLI exit code 1).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Violated preconditions or inconsistent arguments (CLI exit code 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The feasible region is empty, or numerically indistinguishable from
// empty (CLI exit code 2).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdbgp

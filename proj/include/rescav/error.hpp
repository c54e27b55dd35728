#pragma once

#include <stdexcept>
#include <string>

namespace rescav {

// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (CSV rows, JSON, config lines).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A file parsed but its columns or keys do not match the expected layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input data violates a documented invariant (non-positive price, duplicate tick, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments outside an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// |Q_t| fell below the degeneracy guard or the recursion left the finite range.
class DegenerateQuantile : public Error {
 public:
  using Error::Error;
};

// Numerical procedure could not produce a result (singular design, no feasible point, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rescav

#pragma once

#include <stdexcept>
#include <string>

namespace hse {

// Base of every error raised by the library. The CLI maps the concrete
// kinds onto its exit codes (2 for input/usage problems, 3 for numeric
// failures).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (shape or channel mismatch,
// misregistered grids, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file content.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A quantity has no value for the given input (all pixels ignored, zero
// denominator in a metric, ...).
class UndefinedValue : public Error {
 public:
  using Error::Error;
};

// Non-finite gradients or losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

class InvalidSplit : public Error {
 public:
  using Error::Error;
};

class OutOfExtent : public Error {
 public:
  using Error::Error;
};

}  // namespace hse

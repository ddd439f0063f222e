#pragma once

#include <stdexcept>
#include <string>

namespace ssflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or shape violation on caller-supplied data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient encountered during evaluation or solving.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// File could not be read/written, or its encoding is not the expected one.
class FormatError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace ssflow

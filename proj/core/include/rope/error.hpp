#pragma once

#include <stdexcept>
#include <string>

namespace rope {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The selection-count histograms do not support a mixture fit
/// (not U-shaped, empty fitting window, infeasible constraint).
class NotFittable : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine failed to converge or hit an
/// unrecoverable numerical condition.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed, or a file was malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace rope

#pragma once

#include <stdexcept>
#include <string>

namespace nlgkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input could not be read or written (missing file, permission problem).
class IoError : public Error {
public:
  using Error::Error;
};

/// Caller supplied an argument outside the operation's domain.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

}  // namespace nlgkit

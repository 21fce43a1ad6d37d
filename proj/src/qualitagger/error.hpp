#pragma once

#include <stdexcept>
#include <string>

namespace qtag {

// Bad caller input: invalid flag values, violated preconditions on arguments.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data does not satisfy an operation's contract (empty dataset,
// single-class training set, unparseable model file...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackendErrorKind {
  Unreachable,
  Timeout,
  HttpStatus,
  MalformedResponse,
  LengthMismatch,
};

const char* to_string(BackendErrorKind kind);

// Failures talking to a scoring backend. All kinds are safe to retry.
class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  BackendErrorKind kind() const noexcept { return kind_; }

 private:
  BackendErrorKind kind_;
};

}  // namespace qtag

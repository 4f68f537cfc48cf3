#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smarttoy {

/// Base for every error raised by the core library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, out-of-order streams, invalid configuration.
/// The CLI maps these to exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A broken internal invariant (replay mismatch, corrupted state).
/// The CLI maps these to exit code 2.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Raised when an event-log line cannot be decoded.
class EventParseError : public InputError {
 public:
  EventParseError(std::size_t offset, std::string expected)
      : InputError("event parse error at byte " + std::to_string(offset) +
                   ": expected " + expected),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

/// Raised when an event arrives with a timestamp older than its predecessor.
class OrderingError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace smarttoy

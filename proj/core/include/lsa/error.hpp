#pragma once

#include <stdexcept>
#include <string>

namespace lsa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates an invariant. The message names the field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its precondition (e.g. stepping a finished episode).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A forward pass, gradient, or parameter update produced a non-finite value.
class NumericFault : public Error {
 public:
  using Error::Error;
};

/// Sampling was requested from a goal storage that holds no entries.
class EmptyStorageError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint file is truncated, has the wrong magic/version, or was written for another config.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// The environment never produced a success within the watchdog limit.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// File-system failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lsa

#pragma once

#include <stdexcept>
#include <string>

namespace xvloc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or specification values. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or malformed files. The CLI maps this to exit code 3.
class IoError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateCloud : public Error {
 public:
  using Error::Error;
};

class MissingGroundTruth : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidTrajectory : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class EmptyLog : public Error {
 public:
  using Error::Error;
};

}  // namespace xvloc

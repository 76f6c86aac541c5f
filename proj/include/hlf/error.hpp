#pragma once

#include <stdexcept>
#include <string>

namespace hlf {

// Base of every error thrown by the library. `kind()` is a stable,
// machine-readable tag used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

class InvalidData : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_data"; }
};

class ConfigError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

class LoadError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "load_error"; }
};

class TrainingError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "training_error"; }
};

}  // namespace hlf

#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace popsim {

/// @brief Base class of every error raised by the library
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// @brief Invalid argument or violated type invariant
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// @brief A measurement outcome with zero Born weight was requested
class NullOutcomeError : public Error {
 public:
  using Error::Error;
};

/// @brief Grid does not resolve a physical length scale
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// @brief Detection model applied to a state of the wrong kind
class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

/// @brief Strict configuration failure; carries the offending key and line
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::string key = {}, int line = 0,
              std::string suggestion = {})
      : Error(message), key_(std::move(key)), line_(line), suggestion_(std::move(suggestion)) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }
  const std::string& suggestion() const { return suggestion_; }

 private:
  std::string key_;
  int line_;
  std::string suggestion_;
};

/// @brief Numerical guard failure (aliasing or probability in the guard band)
class NumericalGuardError : public Error {
 public:
  NumericalGuardError(const std::string& message, std::size_t required_n)
      : Error(message), required_n_(required_n) {}

  /// Smallest power-of-two grid length expected to pass, 0 if unknown
  std::size_t required_n() const { return required_n_; }

 private:
  std::size_t required_n_;
};

class AliasingError : public NumericalGuardError {
 public:
  using NumericalGuardError::NumericalGuardError;
};

class GuardBandError : public NumericalGuardError {
 public:
  using NumericalGuardError::NumericalGuardError;
};

}  // namespace popsim

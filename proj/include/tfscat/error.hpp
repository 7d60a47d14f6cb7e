#pragma once

#include <stdexcept>
#include <string>

namespace tfs {

/// Failure categories. They map onto CLI exit codes (usage 1, data 2,
/// numerical 3).
enum class ErrorKind { usage, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid configuration or arguments.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// A filter whose passband does not fit below the Nyquist frequency of its axis.
class BandwidthError : public Error {
 public:
  explicit BandwidthError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Malformed or inconsistent input data (files, tensors, shapes).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Non-finite values or diverging iterations.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

}  // namespace tfs

#pragma once

#include <stdexcept>
#include <string>

namespace corrvae {

// Error categories map onto CLI exit codes (2 config, 3 data, 4 numerical).
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, const std::string& what)
      : Error(ErrorKind::config, std::move(module), what) {}
};

class DataError : public Error {
 public:
  DataError(std::string module, const std::string& what)
      : Error(ErrorKind::data, std::move(module), what) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string module, const std::string& what)
      : Error(ErrorKind::numerical, std::move(module), what) {}
};

}  // namespace corrvae

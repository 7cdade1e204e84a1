#pragma once

#include <stdexcept>
#include <string>

namespace csshap {

// Failure categories. The CLI maps each onto a process exit code.
enum class ErrorKind {
  kInvalidInput,
  kConfiguration,
  kCapacity,
  kFormat,
  kTraining,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& what)
      : Error(ErrorKind::kInvalidInput, what) {}
};

struct ConfigurationError : Error {
  explicit ConfigurationError(const std::string& what)
      : Error(ErrorKind::kConfiguration, what) {}
};

// Raised when a request exceeds an algorithmic bound (e.g. exact enumeration).
struct CapacityError : Error {
  explicit CapacityError(const std::string& what)
      : Error(ErrorKind::kCapacity, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::kFormat, what) {}
};

struct TrainingError : Error {
  explicit TrainingError(const std::string& what)
      : Error(ErrorKind::kTraining, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace csshap

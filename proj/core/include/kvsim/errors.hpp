#pragma once

#include <stdexcept>
#include <string>

namespace kvsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated (bad parameters, overlapping states, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Field shapes or sample counts do not match the grid.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A model evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// The integration left the admissible range (non-finite stress or energy above the guard).
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Malformed or invalid configuration text.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line) : Error(what), line_(line) {}
  /// 1-based line number, 0 when the error is not tied to a line.
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kvsim

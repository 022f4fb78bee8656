#pragma once

#include <stdexcept>
#include <string>

namespace basisforge {

enum class ErrorKind { Shape, Config, Input, Numeric, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Raised when an iterate becomes non-finite or a solver diverges. Carries
/// the iteration index at which it was detected (-1 when not applicable).
class NumericError : public Error {
 public:
  NumericError(const std::string& what, long iteration)
      : Error(ErrorKind::Numeric, format(what, iteration)), detail_(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }
  /// The message without the iteration suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(const std::string& what, long iteration);
  std::string detail_;
  long iteration_;
};

// Throws ShapeError with a "<context>: expected a x b, got c x d" message.
[[noreturn]] void throw_shape(const std::string& context, long er, long ec, long gr, long gc);

}  // namespace basisforge

#pragma once

#include <stdexcept>
#include <string>

namespace absvo {

// Every library failure derives from Error so callers can catch one type.
// The CLI maps InputError subclasses to exit code 2 and NumericalError
// subclasses to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonPositiveDepth : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonPositiveDisparity : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class LengthMismatch : public InputError {
 public:
  using InputError::InputError;
};

class EmptyMask : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class Divergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateGeometry : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateConfiguration : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TooShort : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, int line = 0)
      : InputError(line > 0 ? what + " (line " + std::to_string(line) + ")"
                            : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

class MalformedRotation : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedFormat : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace absvo

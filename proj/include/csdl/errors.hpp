#pragma once

#include <stdexcept>
#include <string>

namespace csdl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of the operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its legal domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed (non-finite values, unparsable files).
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An iterate became non-finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace csdl

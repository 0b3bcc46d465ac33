#pragma once

#include <stdexcept>
#include <string>

namespace rkform {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Dt() was applied to something other than an unknown field.
class NonFieldTimeDerivative : public Error {
 public:
  using Error::Error;
};

/// A boundary condition or binding references a field the form does not have.
class MismatchedFieldCount : public Error {
 public:
  using Error::Error;
};

class UnboundSymbol : public Error {
 public:
  using Error::Error;
};

class UnsupportedExpression : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class MaxIterationsExceeded : public Error {
 public:
  using Error::Error;
};

class SolverDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace rkform

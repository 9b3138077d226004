#pragma once

#include <stdexcept>
#include <string>

namespace substspec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An enumeration (support of a word distribution, realisation set, ...)
/// would exceed the configured size cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

class NotPrimitive : public Error {
 public:
  using Error::Error;
};

/// Perron root is not strictly larger than one.
class NonExpanding : public Error {
 public:
  using Error::Error;
};

class NotCompatible : public Error {
 public:
  using Error::Error;
};

class ConditionNotEstablished : public Error {
 public:
  using Error::Error;
};

class NegativeQWithoutRecognisability : public Error {
 public:
  using Error::Error;
};

/// A window needed by a recognition table lookup is absent.
class WindowMissing : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace substspec

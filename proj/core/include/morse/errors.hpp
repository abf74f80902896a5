#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. offset() is the byte position of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Newton, ODE or quadrature failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class DegenerateCriticalPoint : public Error {
 public:
  using Error::Error;
};

/// A numerical identity or exact algebraic check did not hold.
class VerificationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace morse

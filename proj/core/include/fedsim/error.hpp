#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedsim {

// Base of every error raised by the library. Subclasses carry the structured
// fields callers branch on; what() is always a complete human-readable message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(std::size_t lhs, std::size_t rhs, const std::string& context)
      : Error(context + ": dimension mismatch (" + std::to_string(lhs) + " vs " +
              std::to_string(rhs) + ")"),
        lhs_(lhs),
        rhs_(rhs) {}

  std::size_t lhs() const noexcept { return lhs_; }
  std::size_t rhs() const noexcept { return rhs_; }

 private:
  std::size_t lhs_;
  std::size_t rhs_;
};

// Argument outside an operation's domain (negative sqrt input, bad counts, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Raised when training or a server step produces a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent encoded update.
class CodecError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedsim

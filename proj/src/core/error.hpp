#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace farkasnet {

// Every failure raised by the library derives from Error. The C API maps
// each subclass onto one fk_status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or feature counts that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad values handed in by the caller (non-finite entries, labels out of range).
class InputError : public Error {
 public:
  using Error::Error;
};

// An operation invoked in a state where it is not defined.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Invalid network description or init scheme.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. offset() is the byte position of the problem.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace farkasnet

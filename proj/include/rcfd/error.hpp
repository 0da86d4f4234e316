#pragma once

#include <stdexcept>
#include <string>

namespace rcfd {

// Base for everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// A model file is structurally fine but cannot be used (e.g. no norm stats).
class InvalidModel : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

// Model / feature file decoding failures.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatch : public FormatError {
 public:
  VersionMismatch(unsigned found, unsigned expected)
      : FormatError("version mismatch: file has format version " + std::to_string(found) +
                    ", this build reads version " + std::to_string(expected)),
        found_(found),
        expected_(expected) {}

  unsigned found() const noexcept { return found_; }
  unsigned expected() const noexcept { return expected_; }

 private:
  unsigned found_;
  unsigned expected_;
};

class Truncated : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace rcfd

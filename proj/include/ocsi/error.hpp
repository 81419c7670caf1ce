#pragma once

#include <stdexcept>
#include <string>

namespace ocsi {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

enum class FormatErrc {
  bad_magic,
  truncated,
  duplicate_id,
  length_mismatch,
  non_finite,
  bad_kind,
  version_mismatch,
  malformed,
};

const char* to_string(FormatErrc code);

// Raised while decoding one of the on-disk formats (EMB1, SIM1, LMART/1, EVAL/1).
class FormatError : public Error {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

}  // namespace ocsi

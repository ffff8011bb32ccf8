#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relcomp {

// Failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInput,       // unreadable or missing input file
  kParse,       // malformed document
  kValidation,  // well-formed input that violates a domain invariant
  kBackend,     // external transcoder failed, timed out or lacks a codec
  kNotFound,
  kConflict,
  kGone,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace relcomp

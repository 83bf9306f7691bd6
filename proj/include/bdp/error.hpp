#pragma once

#include <stdexcept>
#include <string>

namespace bdp {

enum class ErrorKind { validation, not_found, conflict, internal };

// Base for every error raised by the core. `code` is a stable machine string
// (it ends up in API error bodies), `what()` is the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string code, const std::string& message)
      : Error(ErrorKind::validation, std::move(code), message) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message)
      : Error(ErrorKind::not_found, "not_found", message) {}
};

class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& message)
      : Error(ErrorKind::conflict, "conflict", message) {}
};

// Raised by numeric routines for out-of-domain arguments.
class DomainError : public ValidationError {
 public:
  explicit DomainError(const std::string& message)
      : ValidationError("domain_error", message) {}
};

}  // namespace bdp

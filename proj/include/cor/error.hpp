#pragma once

#include <stdexcept>
#include <string>

namespace cor {

/// Process exit status associated with each error family.
enum class ErrorKind : int {
  Usage = 1,
  Data = 2,
  Invariant = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ErrorKind::Invariant, what) {}
};

// Malformed input documents (JSON, JSONL, coordinate blocks).
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// An environment document that parses but violates a grid invariant.
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace cor

#pragma once

#include <stdexcept>
#include <string>

namespace treeattn {

// Exit codes used by the command-line front end; every library error maps to one.
enum class ErrorKind { Usage = 1, Format = 2, Structure = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Malformed input text (bad column counts, unbalanced brackets, invalid JSON).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

/// Well-formed input that violates a structural contract (cycles, dimension mismatch).
class StructureError : public Error {
 public:
  explicit StructureError(const std::string& what) : Error(ErrorKind::Structure, what) {}
};

/// A computation produced NaN or Inf.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

}  // namespace treeattn

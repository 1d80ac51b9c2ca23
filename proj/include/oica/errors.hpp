#pragma once

#include <stdexcept>
#include <string>

namespace oica {

/// Category of a failure. The CLI maps each kind to a distinct exit code.
enum class ErrorKind {
  input,       // malformed arguments, preconditions on sizes or values
  dimension,   // shape mismatch between operands
  format,      // unreadable or malformed files
  numerical,   // non-finite values, eigensolver failures
  assumption,  // model assumptions violated (dependent atoms, k > m)
  sampling,    // rejection budget exhausted
  deflation,   // found atom inconsistent with the subspace
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorKind::dimension, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class AssumptionError : public Error {
 public:
  explicit AssumptionError(const std::string& what) : Error(ErrorKind::assumption, what) {}
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what) : Error(ErrorKind::sampling, what) {}
};

class DeflationError : public Error {
 public:
  explicit DeflationError(const std::string& what) : Error(ErrorKind::deflation, what) {}
};

/// Prefixes the message of an oica::Error with the pipeline stage it came from,
/// preserving its kind.
[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage);

}  // namespace oica

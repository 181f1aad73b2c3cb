#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wristop {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a precondition (non-positive dt, empty epoch list, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data cannot be used (bad file, degenerate signal, ...). Maps to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Wire-level violation. Maps to exit code 3.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class IndeterminateOrientation : public DataError {
 public:
  IndeterminateOrientation() : DataError("indeterminate orientation: zero-norm acceleration") {}
};

class StaleSample : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateSignal : public DataError {
 public:
  using DataError::DataError;
};

class EncodeError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// Malformed structured-text input. `line` is 1-based, 0 when unknown.
class ParseError : public DataError {
 public:
  ParseError(std::string source, std::size_t line, std::string field, const std::string& what)
      : DataError(format(source, line, field, what)),
        source_(std::move(source)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& source, std::size_t line, const std::string& field,
                            const std::string& what) {
    std::string out = source.empty() ? std::string("<input>") : source;
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += ": field '" + field + "'";
    return out + ": " + what;
  }

  std::string source_;
  std::size_t line_;
  std::string field_;
};

}  // namespace wristop

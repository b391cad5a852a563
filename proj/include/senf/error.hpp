#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace senf {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: out-of-range parameters, violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Problems with experiment data (as opposed to how the library was called).
class DataError : public Error {
 public:
  using Error::Error;
};

class MalformedRow : public DataError {
 public:
  MalformedRow(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateKey : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : DataError(field.empty() ? what : field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class HarnessError : public Error {
 public:
  using Error::Error;
};

}  // namespace senf

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sockscope {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed trace input. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class UnknownFunctionError : public ParseError {
public:
  UnknownFunctionError(std::size_t line, const std::string& name)
      : ParseError(line, "unknown function '" + name + "'"), name_(name) {}

  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

// Operation applied to a socket of the wrong kind.
class WrongTypeError : public Error {
public:
  using Error::Error;
};

class WrongFunctionError : public Error {
public:
  using Error::Error;
};

// Address family that has no anonymized form.
class NotApplicableError : public Error {
public:
  using Error::Error;
};

}  // namespace sockscope

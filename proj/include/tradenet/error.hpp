#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tradenet {

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A transaction file line that cannot be accepted.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Sample cannot support a power-law fit (all values equal, x_min out of range).
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

// Not enough data for the requested statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Reference selection found no comparable stock.
class NoReferenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tradenet

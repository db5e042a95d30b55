#pragma once

#include <stdexcept>
#include <string>

namespace said {

// Base for every error raised by the library. The CLI maps these onto exit
// codes: DataError/ConfigError -> 2, anything escaping a grid cell -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss, parameter or gradient during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace said

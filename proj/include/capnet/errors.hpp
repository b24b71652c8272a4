#pragma once

#include <stdexcept>
#include <string>

namespace capnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or constraint violation detected before any work runs.
// The CLI maps this to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input data. Carries a 1-based line number when one is known.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line_no)
      : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
  explicit ParseError(const std::string& msg) : Error(msg), line(0) {}
  std::size_t line;
};

struct IoError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct LookupError : Error {
  using Error::Error;
};

struct StreamError : Error {
  using Error::Error;
};

}  // namespace capnet

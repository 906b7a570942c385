#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ser {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (manifest, config). Carries the 1-based line when known.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  std::size_t line;
};

struct ValidationError : Error {
  using Error::Error;
};

struct UnsupportedFormatError : Error {
  using Error::Error;
};

struct RangeError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace ser

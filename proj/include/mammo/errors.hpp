#pragma once

#include <stdexcept>
#include <string>

namespace mammo {

/// Malformed or unsupported file header.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Payload shorter than the header promises.
struct LengthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input for which the computation is mathematically undefined
/// (constant image in normalization, empty fuzzy cluster, ...).
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mammo

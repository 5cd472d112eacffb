#pragma once

#include <stdexcept>

namespace migdir {

// Raw (x, y) pair too close to the origin to define a direction.
class DegenerateDirection : public std::domain_error {
  using std::domain_error::domain_error;
};

// Non-finite value produced inside a numeric pipeline (forward pass, training).
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; message names the file and byte offset where known.
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid model or run configuration.
class ConfigError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace migdir

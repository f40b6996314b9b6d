#pragma once

#include <stdexcept>
#include <string>

namespace spanemo {

// Caller misuse: bad arguments, empty inputs, mismatched label spaces.
// The CLI maps this to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shape disagreement between vectors/matrices.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// TSV header does not match the label space.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed cell or file content.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Label segment alone does not fit the encoder's maximum length.
class InputTooLongError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss) or another runtime failure.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyStratumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spanemo

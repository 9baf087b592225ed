#pragma once

#include <stdexcept>
#include <string>

namespace pcl {

// Exit-code taxonomy used by the CLI: input/parse/validation problems exit 2,
// registry/selection problems exit 3, missing labels exit 4, anything else 1.

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file contents (wrong column count, bad header, short row).
struct ParseError : InputError {
  using InputError::InputError;
};

// Well-formed input carrying an out-of-contract value (label 7, cutoff 9).
struct ValidationError : InputError {
  using InputError::InputError;
};

// Bad or inconsistent configuration (duplicate run ids, max_epochs=0).
struct ConfigError : InputError {
  using InputError::InputError;
};

// Binary/vector file whose framing does not match its declared format.
struct FormatError : InputError {
  using InputError::InputError;
};

// Prediction sets or label sets that do not cover the same par_ids.
struct AlignmentError : InputError {
  using InputError::InputError;
};

// Registry smaller than the requested ensemble, unknown run id, etc.
struct SelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation requires gold labels that the split does not carry.
struct LabelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or activation during training.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pcl

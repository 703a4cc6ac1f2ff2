#pragma once

#include <stdexcept>
#include <string>

namespace splash {

// Error taxonomy used across the library. The CLI maps these onto exit codes:
// config errors -> 2, data/format errors -> 3, anything else -> 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lookup of a key that was never declared.
struct MissingKeyError : Error {
  using Error::Error;
};

// Scalar/array kind mismatch, bad index, or array length mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Argument outside the operator's domain (e.g. multiply by gamma <= 0).
struct DomainError : Error {
  using Error::Error;
};

// Non-finite values produced or supplied where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// API called outside its contract (wrong phase, bad m, ...).
struct UsageError : Error {
  using Error::Error;
};

// Malformed records inside otherwise readable input.
struct DataError : Error {
  using Error::Error;
};

// Unreadable container: bad magic, version mismatch, truncation.
struct FormatError : Error {
  using Error::Error;
};

// Bad experiment configuration (unknown keys, invalid values).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace splash

#pragma once

#include <stdexcept>
#include <string>

namespace vdn {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes; the message names both shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Math domain violation (log of a non-positive value, Fenchel conjugate
// evaluated outside dom f*, division by zero).
struct DomainError : Error {
  using Error::Error;
};

// API contract violation (non-scalar loss, label out of range, unknown
// domain id).
struct ContractError : Error {
  using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

// Internal invariant broken (unnormalized world, critic output outside its
// guaranteed range).
struct InvariantError : Error {
  using Error::Error;
};

// File I/O failure: unreadable path, truncated blob, corrupt manifest.
struct IoError : Error {
  using Error::Error;
};

// Bad configuration: unknown key, invalid value, checkpoint/config mismatch.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace vdn

#pragma once

#include <stdexcept>
#include <string>

namespace lucid {

// Base for everything we throw on purpose. Catch sites can distinguish
// "the caller passed garbage" (ValidationError and friends, CLI exit 1)
// from "something broke at runtime" (the rest, CLI exit 2).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or size mismatch between tensors/matrices. Message names both shapes.
struct DimensionError : Error {
  using Error::Error;
};

// An API precondition was violated (wrong call order, scalar expected, ...).
struct ContractError : Error {
  using Error::Error;
};

// Object is in the wrong state for the requested operation
// (tape already consumed, optimizer applied to a grad-less tensor, ...).
struct StateError : Error {
  using Error::Error;
};

// Bad or inconsistent configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// A numeric domain was violated (non-finite value where finite is required).
struct DomainError : Error {
  using Error::Error;
};

// A geometric construction collapsed (zero-norm direction, parallel basis, ...).
struct DegeneracyError : Error {
  using Error::Error;
};

// Malformed input file or stream.
struct ParseError : Error {
  using Error::Error;
};

// User-facing input failed validation (CLI args, dataset layout, config keys).
struct ValidationError : Error {
  using Error::Error;
};

// Filesystem / stream failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace lucid

#pragma once

#include <stdexcept>
#include <string>

namespace petseg {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, truncated header, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input using a feature the toolkit does not handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Grid mismatch between two volumes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Volume carries the wrong semantic tag for the operation.
class KindError : public Error {
 public:
  using Error::Error;
};

// Bad voxel values (NaN logits, non-binary masks, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

// Caller broke a protocol contract (e.g. missing window output).
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace petseg

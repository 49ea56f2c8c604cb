#pragma once

#include <stdexcept>
#include <string>

namespace daccn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or rank mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: non-integral conv output size, bad model dims, bad config file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Value outside an operation's domain (division by zero, log of nonpositive, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// API misuse: non-scalar loss, repeated backward, list length mismatch.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Empty reduction set: no valid pixel in a loss or metric.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace daccn

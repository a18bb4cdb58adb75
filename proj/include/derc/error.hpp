#pragma once

#include <stdexcept>
#include <string>

namespace derc {

// Base class for every error thrown by the library. The CLI maps the
// concrete type to an exit code (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument to a function: shape mismatch, empty input, k > n, ...
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed input text (CSV, series matrix, config file).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input whose content violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Inconsistent hyperparameters or architecture.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Model container problems: bad magic, version mismatch, truncation.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Training or evaluation reached a numerically invalid state
// (non-finite loss, degenerate cluster, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace derc

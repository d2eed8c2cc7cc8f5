#pragma once

#include <stdexcept>
#include <string>

namespace noisyal {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (dataset, noise sidecar, predictions).
class DataError : public Error {
 public:
  using Error::Error;
};

// Syntactically broken input; the message carries the element path or byte
// offset where parsing stopped.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// Failure while running an experiment (IO, exhausted sampling, ...).
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace noisyal

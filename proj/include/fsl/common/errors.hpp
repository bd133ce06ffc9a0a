#pragma once

#include <stdexcept>
#include <string>

namespace fsl {

// Base for every error raised by the library. The CLI maps subclasses onto
// stable exit codes (2 config, 3 io/data, 4 numerical divergence).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

class IndexError : public Error {
  public:
    using Error::Error;
};

// Violated precondition on an operation's inputs.
class ContractError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

// Malformed input data (bad field, unparsable timestamp, empty file ...).
class DataError : public Error {
  public:
    using Error::Error;
};

// NaN/Inf produced by an op, or a diverged training run.
class NumericalError : public Error {
  public:
    using Error::Error;
};

} // namespace fsl

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dynak {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A text record could not be parsed. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// A required CSV column is missing.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by its caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A user or item index outside the model or log vocabulary.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Negative sampling could not find a valid example.
class SamplingError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  explicit TrainingDivergedError(std::size_t iteration)
      : Error("training diverged: non-finite parameter at iteration " +
              std::to_string(iteration)),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A serialized artifact is truncated or internally inconsistent.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model and a dataset do not share a vocabulary.
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynak

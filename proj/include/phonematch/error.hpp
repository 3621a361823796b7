#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phonematch {

// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file: bad magic, truncated payload, unparsable line.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input whose values violate an invariant (non-finite, out of range).
class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// A declared input path does not exist.
class MissingInput : public Error {
 public:
  explicit MissingInput(const std::string& path)
      : Error("missing input: " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace phonematch

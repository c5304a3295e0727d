#pragma once

#include <stdexcept>
#include <string>

namespace spatialcc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File was readable but its content is not a supported format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A vector whose norm is too small to define a direction.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// Image statistics are undefined (e.g. a channel with zero mean).
class DegenerateImageError : public Error {
 public:
  using Error::Error;
};

/// A sparse field with no usable entries, or an empty pixel selection.
class EmptyFieldError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters, unknown estimator names and similar.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Illusion spec or manifest that fails validation.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace spatialcc

#pragma once

#include <stdexcept>
#include <string>

namespace xmodal {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file does not follow its binary or JSON-lines layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Data is well-formed but breaks a domain invariant (shapes, ids, finiteness).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The filesystem refused a read or write.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss or parameters).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace xmodal

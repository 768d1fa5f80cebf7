#pragma once

#include <stdexcept>
#include <string>

namespace fkpf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An object is in a state that the operation does not accept
/// (e.g. an unnormalized particle set passed to apply_measure).
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Every weight vanished, i.e. the total likelihood collapsed.
class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

/// Bound evaluated outside the hypotheses under which it holds.
class OutOfHypothesis : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fkpf

#pragma once

#include <stdexcept>
#include <string>

namespace mumhors {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scheme or function parameters violate a documented constraint.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// An argument is malformed for the current object state (duplicate index, bad position, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// The signer has no window of keys left.
class CapacityExhausted : public Error {
 public:
  CapacityExhausted() : Error("no more private keys to sign") {}
};

class DerivationFailure : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact (state, signature, key file) could not be decoded.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked out of its required sequence.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace mumhors

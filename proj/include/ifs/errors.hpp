#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace ifs {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operands belong to different spaces (or the wrong kind of space).
class KindMismatchError : public Error {
public:
  using Error::Error;
};

/// A plain argument is out of range or malformed (bad symbol, n = 0, ...).
class InvalidArgumentError : public Error {
public:
  using Error::Error;
};

/// Backward composition, inversion or backward orbit generation was
/// requested through a map that is not a homeomorphism.
class NotInvertibleError : public Error {
public:
  using Error::Error;
};

/// A theorem hypothesis required by an operation does not hold for the
/// given inputs. `precondition()` names the violated hypothesis.
class PreconditionError : public Error {
public:
  PreconditionError(std::string precondition, const std::string& detail)
      : Error(precondition + ": " + detail), precondition_(std::move(precondition)) {}

  const std::string& precondition() const { return precondition_; }

private:
  std::string precondition_;
};

/// The pullback found no admissible preimage although the openness
/// certificate promised one; carries the index where the step failed.
class CertificateViolationError : public Error {
public:
  CertificateViolationError(long long index, const std::string& detail)
      : Error("certificate violation at index " + std::to_string(index) + ": " + detail),
        index_(index) {}

  long long index() const { return index_; }

private:
  long long index_;
};

/// A documented internal invariant failed. Indicates a bug or inputs that
/// contradict their own metadata.
class InternalInvariantError : public Error {
public:
  using Error::Error;
};

/// Configuration / schema problems in the experiment layer.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace ifs

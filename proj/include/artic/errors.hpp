#pragma once

#include <stdexcept>
#include <string>

namespace artic {

// Base class for everything thrown by this library. Each subclass maps to
// one CLI exit code / error class, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Matrix / sequence dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// manifest.json is missing, unparseable, or schema-invalid.
class ManifestError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// A stored object violates its own invariants (names the offending item).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Two artifacts (corpus, checkpoint, classifier) disagree on inventory/dims.
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

// A required file or checkpoint does not exist.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

// Not enough frames/samples to compute a statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace artic

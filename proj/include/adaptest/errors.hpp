#pragma once

#include <stdexcept>
#include <string>

namespace adaptest {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: mismatched scopes, unknown ids, out-of-range state indices.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// The evidence has probability zero under the model.
class InconsistentEvidenceError : public Error {
 public:
  using Error::Error;
};

// A computation would exceed a fixed size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Operation not allowed in the current lifecycle state (e.g. session stopped).
class StateError : public Error {
 public:
  using Error::Error;
};

class InfeasibleParametersError : public Error {
 public:
  using Error::Error;
};

class NonMonotoneQuestionError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class VersionConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace adaptest

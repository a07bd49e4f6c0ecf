#pragma once

#include <stdexcept>
#include <string>

namespace polycomm {

enum class ErrorKind {
  // set kernel
  SpaceMismatch,
  UnboundedSet,
  EmptySet,
  IterationCapExceeded,
  // input
  ParseError,
  ValidationError,
  IndivisibleExtent,
  // analysis
  UncoveredRead,
  UnsatisfiablePlacement,
  ScatterCollision,
  OutOfHull,
  // runtime
  EvaluationError,
  GeometryMismatch,
  DeadlockDetected,
  BufferStateViolation,
  IndexOutOfBounds,
  NotLocal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }

  /// Process exit code for the CLI: 1 parse, 2 validation, 3 analysis,
  /// 4 runtime.
  int exit_code() const;

 private:
  ErrorKind kind_;
};

}  // namespace polycomm

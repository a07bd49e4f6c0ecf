#include "polycomm/error.hpp"

namespace polycomm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SpaceMismatch: return "SpaceMismatch";
    case ErrorKind::UnboundedSet: return "UnboundedSet";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::IterationCapExceeded: return "IterationCapExceeded";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IndivisibleExtent: return "IndivisibleExtent";
    case ErrorKind::UncoveredRead: return "UncoveredRead";
    case ErrorKind::UnsatisfiablePlacement: return "UnsatisfiablePlacement";
    case ErrorKind::ScatterCollision: return "ScatterCollision";
    case ErrorKind::OutOfHull: return "OutOfHull";
    case ErrorKind::EvaluationError: return "EvaluationError";
    case ErrorKind::GeometryMismatch: return "GeometryMismatch";
    case ErrorKind::DeadlockDetected: return "DeadlockDetected";
    case ErrorKind::BufferStateViolation: return "BufferStateViolation";
    case ErrorKind::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorKind::NotLocal: return "NotLocal";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

int Error::exit_code() const {
  switch (kind_) {
    case ErrorKind::ParseError:
      return 1;
    case ErrorKind::ValidationError:
    case ErrorKind::IndivisibleExtent:
    case ErrorKind::SpaceMismatch:
    case ErrorKind::UnboundedSet:
      return 2;
    case ErrorKind::EmptySet:
    case ErrorKind::IterationCapExceeded:
    case ErrorKind::UncoveredRead:
    case ErrorKind::UnsatisfiablePlacement:
    case ErrorKind::ScatterCollision:
    case ErrorKind::OutOfHull:
      return 3;
    default:
      return 4;
  }
}

}  // namespace polycomm

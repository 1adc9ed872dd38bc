#pragma once

#include <stdexcept>
#include <string>

namespace gsslam {

enum class ErrorKind {
  InvalidDepth,
  DegenerateFit,
  EmptyFrame,
  EmptyHistogram,
  StaleContext,
  MapCorrupted,
  TrackingDiverged,
  MissingIndex,
  EmptySequence,
  MalformedLine,
  SizeMismatch,
  TooFewMatches,
  BadConfig,
};

const char* error_kind_name(ErrorKind kind);

// Single exception type carrying a machine-readable kind; thrown for
// contract violations and recoverable pipeline failures alike.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gsslam

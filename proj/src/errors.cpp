#include "gsslam/errors.hpp"

namespace gsslam {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDepth: return "InvalidDepth";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::EmptyFrame: return "EmptyFrame";
    case ErrorKind::EmptyHistogram: return "EmptyHistogram";
    case ErrorKind::StaleContext: return "StaleContext";
    case ErrorKind::MapCorrupted: return "MapCorrupted";
    case ErrorKind::TrackingDiverged: return "TrackingDiverged";
    case ErrorKind::MissingIndex: return "MissingIndex";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::TooFewMatches: return "TooFewMatches";
    case ErrorKind::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace gsslam

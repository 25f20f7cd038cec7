#include "hybridcorr/error.hpp"

namespace hybridcorr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonNegativityViolation: return "NonNegativityViolation";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DuplicatePoints: return "DuplicatePoints";
    case ErrorCode::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorCode::WeightMismatch: return "WeightMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ExactSearchCapExceeded: return "ExactSearchCapExceeded";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::SingularSupport: return "SingularSupport";
    case ErrorCode::CapabilityExceeded: return "CapabilityExceeded";
    case ErrorCode::MajorizationFailure: return "MajorizationFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownDemo: return "UnknownDemo";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace hybridcorr

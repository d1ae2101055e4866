#include "hyperod/error.hpp"

namespace hyperod {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::SingularNormal: return "SingularNormal";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::CostGuard: return "CostGuard";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace hyperod

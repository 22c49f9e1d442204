#include "facegen/error.hpp"

namespace facegen {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonManifoldEdge: return "NonManifoldEdge";
        case ErrorCode::DegenerateQuad: return "DegenerateQuad";
        case ErrorCode::ZeroAreaFace: return "ZeroAreaFace";
        case ErrorCode::IsolatedVertex: return "IsolatedVertex";
        case ErrorCode::TopologyMismatch: return "TopologyMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::PoseLimitViolation: return "PoseLimitViolation";
        case ErrorCode::InvalidParam: return "InvalidParam";
        case ErrorCode::DegenerateProjection: return "DegenerateProjection";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::SingularComponent: return "SingularComponent";
        case ErrorCode::EmptyComponent: return "EmptyComponent";
        case ErrorCode::EmptyLibrary: return "EmptyLibrary";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::NonNormalizedTable: return "NonNormalizedTable";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::InvalidSigma: return "InvalidSigma";
        case ErrorCode::PointOutsideBbox: return "PointOutsideBbox";
        case ErrorCode::EmptyGroom: return "EmptyGroom";
        case ErrorCode::EmptyDensity: return "EmptyDensity";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

ErrorCategory category(ErrorCode code) {
    switch (code) {
        case ErrorCode::Diverged:
        case ErrorCode::SingularComponent:
        case ErrorCode::EmptyComponent:
        case ErrorCode::RankDeficient:
            return ErrorCategory::Numeric;
        default:
            return ErrorCategory::Data;
    }
}

}  // namespace facegen

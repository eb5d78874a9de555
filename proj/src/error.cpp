#include "corn/error.hpp"

namespace corn {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
        case ErrorCode::EmptyMesh: return "EmptyMesh";
        case ErrorCode::NotWatertight: return "NotWatertight";
        case ErrorCode::NonPositiveVolume: return "NonPositiveVolume";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::Divergence: return "Divergence";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::Io: return "Io";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::TruncatedRecord: return "TruncatedRecord";
        case ErrorCode::Parse: return "Parse";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::SingularSolve: return "SingularSolve";
        case ErrorCode::NonPositiveGains: return "NonPositiveGains";
        case ErrorCode::NoCorrespondences: return "NoCorrespondences";
        case ErrorCode::WorkspaceTooSmall: return "WorkspaceTooSmall";
    }
    return "Unknown";
}

}  // namespace corn

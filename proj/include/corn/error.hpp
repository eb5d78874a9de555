#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corn {

enum class ErrorCode {
    DegenerateInput,
    DegenerateGeometry,
    EmptyMesh,
    NotWatertight,
    NonPositiveVolume,
    TooFewPoints,
    SizeMismatch,
    ShapeMismatch,
    NonFiniteInput,
    NonFiniteGradient,
    Divergence,
    EmptyDataset,
    Io,
    BadMagic,
    UnsupportedVersion,
    TruncatedRecord,
    Parse,
    InvalidConfig,
    SingularSolve,
    NonPositiveGains,
    NoCorrespondences,
    WorkspaceTooSmall,
};

std::string_view to_string(ErrorCode code);

// Domain error raised by every module. The code is stable and maps onto the
// error names used in the file-format and CLI documentation.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace corn

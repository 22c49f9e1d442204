#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facegen {

enum class ErrorCode {
    // mesh
    NonManifoldEdge,
    DegenerateQuad,
    ZeroAreaFace,
    IsolatedVertex,
    TopologyMismatch,
    // model
    DimensionMismatch,
    PoseLimitViolation,
    InvalidParam,
    DegenerateProjection,
    // learning
    ShapeMismatch,
    Diverged,
    // sampling
    SingularComponent,
    EmptyComponent,
    EmptyLibrary,
    IndexOutOfRange,
    EmptyTable,
    NonNormalizedTable,
    // appearance
    NonFiniteInput,
    RankDeficient,
    InvalidSigma,
    // hair
    PointOutsideBbox,
    EmptyGroom,
    EmptyDensity,
    // io
    IoError,
    ParseError,
};

std::string_view to_string(ErrorCode code);

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorCategory { Data, Numeric };

ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the error-code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace facegen

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace capaf {

enum class ErrorCode {
    InvalidAngle,
    GridTooCoarse,
    ShapeMismatch,
    GridMismatch,
    NonHorizontalDirection,
    NeumannViolation,
    GenerationFailed,
    AllZeroLambdas,
    NegativeLambda,
    DimensionMismatch,
    Asymmetric,
    IndexOutOfRange,
    InsufficientSamples,
    DegenerateWeight,
    SolverFailure,
    IllConditioned,
    NotConvex,
    Io,
    Parse,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable error code; `what()` holds the
/// human-readable detail.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace capaf

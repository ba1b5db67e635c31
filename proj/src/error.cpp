#include "capaf/error.hpp"

namespace capaf {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidAngle: return "invalid-angle";
    case ErrorCode::GridTooCoarse: return "grid-too-coarse";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::NonHorizontalDirection: return "non-horizontal-direction";
    case ErrorCode::NeumannViolation: return "neumann-violation";
    case ErrorCode::GenerationFailed: return "generation-failed";
    case ErrorCode::AllZeroLambdas: return "all-zero-lambdas";
    case ErrorCode::NegativeLambda: return "negative-lambda";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::Asymmetric: return "asymmetric";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::InsufficientSamples: return "insufficient-samples";
    case ErrorCode::DegenerateWeight: return "degenerate-weight";
    case ErrorCode::SolverFailure: return "solver-failure";
    case ErrorCode::IllConditioned: return "ill-conditioned";
    case ErrorCode::NotConvex: return "not-convex";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    }
    return "unknown";
}

} // namespace capaf

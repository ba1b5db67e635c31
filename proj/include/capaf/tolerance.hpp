#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace capaf {

class CapGrid;

/// Numerical tolerances. Discretization-dependent ones scale with the radial
/// spacing to the power of the radial order, so they tighten under refinement.
struct ToleranceProfile {
    std::string name = "default";

    /// Robin residual bound: robin_coeff * d_rho^order * max(1, max|f|), floored.
    double robin_coeff = 50.0;
    double robin_floor = 1e-11;
    /// Multiple of the a-posteriori truncation estimate (boundary_derivative_error)
    /// added to the Robin bound, so smooth but under-resolved fields still certify.
    double robin_estimate_factor = 4.0;

    /// A[h] min eigenvalue must exceed this for a body to certify.
    double convexity_floor = 1e-12;

    /// Relative slack allowed on the wrong side of an inequality.
    double noise_budget = 1e-8;

    /// Eigenvalues with |lambda| <= kernel_rel * lambda_1 are kernel modes.
    double kernel_rel = 1e-6;

    /// Width of the forbidden band (delta, 1 - delta) in the spectral dichotomy.
    double spectral_delta = 0.01;

    /// A gap below this multiple of its error estimate reads as equality.
    double equality_factor = 10.0;

    double robin_tolerance(double d_rho, int order, double scale) const;
    /// robin_tolerance plus robin_estimate_factor * estimate.
    double robin_limit(double d_rho, int order, double scale, double estimate) const;

    static ToleranceProfile defaults();
    static ToleranceProfile strict();
    /// "default" or "strict"; throws Error{Parse} otherwise.
    static ToleranceProfile by_name(const std::string& name);
};

nlohmann::json to_json(const ToleranceProfile& t);

} // namespace capaf

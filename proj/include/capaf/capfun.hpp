#pragma once

#include "capaf/grid.hpp"
#include "capaf/tolerance.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace capaf {

/// A function on the cap satisfying the Robin condition d_mu f = cot(theta) f
/// on the boundary (to the grid's Robin tolerance).
struct CapillaryField {
    CapGrid grid;
    ScalarField values;
    double robin_max = 0.0;
};

/// Parameters a body was generated from; serialized with it.
struct Provenance {
    std::optional<std::uint64_t> seed;
    nlohmann::json params = nlohmann::json::object();
};

/// Capillary support function of a capillary convex body: a capillary field
/// whose A[h] is positive definite at every node.
struct CapillaryBody {
    CapillaryField support;
    double min_eig = 0.0;
    Provenance provenance;

    const CapGrid& grid() const { return support.grid; }
    const ScalarField& values() const { return support.values; }
    double theta() const { return support.grid.theta(); }
};

/// Outcome of certify(): either a body or the reasons it was refused.
struct Certification {
    bool accepted = false;
    double robin_max = 0.0;
    double robin_tolerance = 0.0; ///< largest per-node Robin limit
    double min_eig = 0.0;
    double eig_tolerance = 0.0;
    std::vector<Index> robin_offenders;
    std::vector<Index> convexity_offenders;
    std::optional<CapillaryBody> body;
};

/// l(rho) = 1 - cos(theta) cos(rho), the support function of the unit cap body.
CapillaryBody ell(const CapGrid& grid);
ScalarField ell_values(const CapGrid& grid);

/// <xi, E> for a horizontal unit direction (dx, dy, dz); dz must vanish.
CapillaryField horizontal_linear(const CapGrid& grid, double dx, double dy, double dz = 0.0,
                                 const ToleranceProfile& tol = ToleranceProfile::defaults());

/// Lift a Neumann function u (d_rho u = 0 on the boundary) to the capillary
/// field l * u. Throws Error{NeumannViolation} when the boundary derivative
/// of u exceeds tolerance.
CapillaryField from_neumann(const CapGrid& grid, const ScalarField& u,
                            const ToleranceProfile& tol = ToleranceProfile::defaults());

/// Radial profile of the perturbation mode (k, m). For m = 0 it is
/// cos(k pi rho / theta); for m >= 1 it vanishes like rho^m at the pole so
/// that profile * trig(m phi) is smooth there. Every profile has zero
/// derivative at rho = theta.
double mode_profile(int k, int m, double rho, double theta);

/// l * profile(k, m) * cos(m phi) (or sin when `sine`), a capillary field.
ScalarField capillary_mode(const CapGrid& grid, int k, int m, bool sine = false);

struct RandomBodyParams {
    std::uint64_t seed = 1;
    double base_radius = 1.0;
    double amplitude = 0.3;
    int mode_cap = 3;
};

/// Seeded random capillary convex body base * l + amp * l * u; the amplitude
/// is halved until min eig A[h] >= 0.05 * base. Throws
/// Error{GenerationFailed} after 50 halvings.
CapillaryBody random_body(const CapGrid& grid, const RandomBodyParams& params,
                          const ToleranceProfile& tol = ToleranceProfile::defaults());

/// Seeded random capillary (not necessarily convex) field l * u.
CapillaryField random_capillary(const CapGrid& grid, std::uint64_t seed, int mode_cap = 3, double scale = 1.0,
                                const ToleranceProfile& tol = ToleranceProfile::defaults());

/// Check the Robin condition and positivity of A[h]; never throws for
/// numerical reasons.
Certification certify(const CapGrid& grid, const ScalarField& h,
                      const ToleranceProfile& tol = ToleranceProfile::defaults());

/// Max |Robin residual| of f.
double robin_max(const CapGrid& grid, const ScalarField& f);

/// Support function sum(lambda_i h_i), re-certified.
CapillaryBody minkowski_combine(std::span<const CapillaryBody> bodies, std::span<const double> lambdas,
                                const ToleranceProfile& tol = ToleranceProfile::defaults());

/// h + c1 <xi,E1> + c2 <xi,E2>: the body translated horizontally by (c1, c2).
CapillaryBody translate(const CapillaryBody& body, double c1, double c2);

nlohmann::json body_to_json(const CapillaryBody& body);
/// Rebuilds the grid from the stored layout and re-certifies the support.
CapillaryBody body_from_json(const nlohmann::json& j, const ToleranceProfile& tol = ToleranceProfile::defaults());

void save_body(const CapillaryBody& body, const std::string& path);
CapillaryBody load_body(const std::string& path, const ToleranceProfile& tol = ToleranceProfile::defaults());

} // namespace capaf

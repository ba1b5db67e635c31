#pragma once

#include "capaf/capfun.hpp"
#include "capaf/grid.hpp"
#include "capaf/tolerance.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace capaf {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// L2(C, omega) with d omega = Q(A[f2], A[f2]) / (3 f2) d sigma.
///
/// When the reference body's support is not positive everywhere it is
/// translated horizontally (by the centroid of its boundary curve) before the
/// weights are built; mixed volumes do not see the translation.
struct WeightedSpace {
    CapGrid grid;
    ScalarField f2_original;
    ScalarField f2;          ///< translated reference support, > 0
    double shift_e1 = 0.0;   ///< f2 = f2_original - shift_e1 <xi,E1> - shift_e2 <xi,E2>
    double shift_e2 = 0.0;
    SymTensorField a2;       ///< A[f2]
    ScalarField det2;        ///< det A[f2]
    ScalarField weights;     ///< omega node weights (quadrature included)
};

/// Throws Error{DegenerateWeight} when A[f2] is not positive definite or no
/// translation makes f2 positive.
WeightedSpace make_space(const CapillaryBody& f2);

/// A f = f2 Q(A[f], A[f2]) / det A[f2], evaluated at every node.
ScalarField apply_operator(const WeightedSpace& space, const ScalarField& f);

/// Sparse node-space matrix of apply_operator.
SparseMatrix assemble_operator(const WeightedSpace& space);

/// <f, g>_omega.
double inner(const WeightedSpace& space, const ScalarField& f, const ScalarField& g);
double norm(const WeightedSpace& space, const ScalarField& f);

/// |<f, A g> - <g, A f>| / (|f| |A g| + |g| |A f|), norms in omega.
double self_adjoint_residual(const WeightedSpace& space, const ScalarField& f, const ScalarField& g);

/// |<f, A g>_omega - V(f, g, f2)| with the same scale as self_adjoint_residual.
double form_residual(const WeightedSpace& space, const ScalarField& f, const ScalarField& g);

/// Matrix that extends interior node values to all nodes by solving the
/// discrete Robin condition on the boundary ring.
SparseMatrix robin_extension(const CapGrid& grid);

struct SpectrumReport {
    std::string method;                 ///< "dense" or "shift-invert-arnoldi"
    double theta = 0.0;
    int n_rho = 0;
    int n_phi = 0;
    std::vector<double> eigenvalues;    ///< real parts, descending
    std::vector<double> imag_parts;     ///< nonzero only for spurious complex pairs
    std::vector<ScalarField> eigenvectors; ///< node fields of unit omega norm
    std::vector<double> residuals;      ///< |A v - lambda v|_omega over interior nodes
    std::vector<double> solver_residuals; ///< |C v - lambda v| / |v| of the collocation matrix C
    /// |S - S^T|_F / |S|_F for the sqrt(omega) similarity transform S of C.
    double asymmetry = 0.0;
    int lambda1_index = -1;
    bool lambda1_simple = false;
    double gap = 0.0;                   ///< lambda_1 - lambda_2
    std::vector<int> kernel_indices;
    std::vector<double> kernel_cosines; ///< per horizontal direction E1, E2
    std::vector<int> band_violations;   ///< eigenvalues inside (delta, 1 - delta)
    /// The computed set provably contains every eigenvalue of the band.
    bool band_certified = false;
    double kernel_threshold = 0.0;
    double spectral_delta = 0.0;
};

struct SpectrumOptions {
    int how_many = 8;
    /// "auto" (dense up to 48 x 64 interior nodes, iterative above), "dense" or "iterative".
    std::string method = "auto";
    double shift = 0.5;
    /// Arnoldi restarts.
    int max_iterations = 500;
    /// Relative accuracy of the shift-inverted Ritz values.
    double convergence = 1e-12;
};

/// Leading eigenpairs of A with the Robin condition. Throws
/// Error{SolverFailure} when the solve does not converge.
SpectrumReport spectrum(const WeightedSpace& space, const SpectrumOptions& opts = {},
                        const ToleranceProfile& tol = ToleranceProfile::defaults());

nlohmann::json to_json(const SpectrumReport& r);
/// Columns index, eigenvalue, residual, class.
std::string to_csv(const SpectrumReport& r);

struct EqualityDecomposition {
    double a = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double residual_norm = 0.0; ///< relative to |f|_omega
    double condition = 0.0;
};

/// Omega least squares of f onto span{f1, <xi,E1>, <xi,E2>}. Throws
/// Error{IllConditioned} when f1 nearly lies in the span of the linears.
EqualityDecomposition equality_decompose(const WeightedSpace& space, const ScalarField& f, const ScalarField& f1);

struct AfResult {
    double lhs = 0.0;      ///< V(f, f1, f2)^2
    double rhs = 0.0;      ///< V(f, f, f2) V(f1, f1, f2)
    double gap = 0.0;
    double relative_gap = 0.0;
    double form_lhs = 0.0; ///< same sides through <., A .>_omega
    double form_rhs = 0.0;
    double form_agreement = 0.0; ///< max relative difference between the two forms
    double error_estimate = 0.0;
    /// "holds", "equality within resolution" or "violated".
    std::string verdict;
    std::optional<EqualityDecomposition> decomposition;
};

AfResult af_check(const WeightedSpace& space, const ScalarField& f, const ScalarField& f1,
                  const ToleranceProfile& tol = ToleranceProfile::defaults());
nlohmann::json to_json(const AfResult& r);
nlohmann::json to_json(const EqualityDecomposition& d);

struct ChainEntry {
    int i = 0;
    int j = 0;
    int k = 0;
    double lhs = 0.0; ///< V_(j)^(k-i)
    double rhs = 0.0; ///< V_(i)^(k-j) V_(k)^(j-i)
    double slack = 0.0;
    double relative_slack = 0.0;
    bool ok = false;
};

struct NormalizedEntry {
    int l = 0;
    int k = 0;
    double lhs = 0.0; ///< V_k / b
    double rhs = 0.0; ///< (V_l / b)^((3-k)/(3-l))
    double relative_slack = 0.0;
    bool ok = false;
};

struct ChainReport {
    int m = 3;
    std::vector<double> values; ///< V_(i), i = 0..m
    std::vector<ChainEntry> entries;
    std::vector<NormalizedEntry> normalized; ///< only when body1 is the unit cap and m = 3
    bool all_ok = true;
};

/// V_(i) = V(h0 x (m - i), h1 x i, refs...) and every inequality
/// V_(j)^(k-i) >= V_(i)^(k-j) V_(k)^(j-i) for 0 <= i < j < k <= m.
/// `refs` must hold 3 - m fields; empty defaults to copies of l.
ChainReport af_chain_check(const CapGrid& grid, const ScalarField& h0, const ScalarField& h1, int m = 3,
                           const std::vector<ScalarField>& refs = {},
                           const ToleranceProfile& tol = ToleranceProfile::defaults());

/// The quermassintegral chain of a body against the unit cap, including the
/// normalized form V_k / b >= (V_l / b)^((3-k)/(3-l)) for 0 <= l < k <= 2.
ChainReport quermass_chain(const CapillaryBody& body, const ToleranceProfile& tol = ToleranceProfile::defaults());

nlohmann::json to_json(const ChainReport& r);

} // namespace capaf

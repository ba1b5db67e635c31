#pragma once

#include "capaf/capfun.hpp"
#include "capaf/grid.hpp"

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace capaf {

/// Mixed discriminant Q(A_1, ..., A_n) of n symmetric n x n matrices via the
/// generalized Kronecker delta expansion (n <= 4). Throws
/// Error{DimensionMismatch} on shape problems, Error{Asymmetric} when a matrix
/// is not symmetric to 1e-12 relative.
double mixed_discriminant(std::span<const Eigen::MatrixXd> matrices);

/// Same quantity by polarization of the determinant (any n); used to validate
/// the expansion.
double mixed_discriminant_polarized(std::span<const Eigen::MatrixXd> matrices);

/// n = 2 closed form: (a11 b22 + a22 b11 - 2 a12 b12) / 2.
inline double mixed_discriminant_2(double a11, double a12, double a22, double b11, double b12, double b22)
{
    return 0.5 * (a11 * b22 + a22 * b11 - 2.0 * a12 * b12);
}

/// Nodewise Q(A, B) of two tensor fields.
Eigen::VectorXd mixed_discriminant(const SymTensorField& a, const SymTensorField& b);

/// V(f1, f2, f3) = (1/3) * integral of f1 Q(A[f2], A[f3]).
double mixed_volume(const CapGrid& grid, const ScalarField& f1, const ScalarField& f2, const ScalarField& f3);

/// Solid spherical cap volume pi (1 - cos t)^2 (2 + cos t) / 3, the volume of
/// the unit capillary cap body.
double cap_volume(double theta);

/// Quermassintegral of index j in 0..3: mixed volume with 3 - j copies of h
/// followed by j copies of l.
double quermassintegral(const CapGrid& grid, const ScalarField& h, int j);
double quermassintegral(const CapillaryBody& body, int j);

struct QuermassReport {
    double theta = 0.0;
    int n_rho = 0;
    int n_phi = 0;
    std::vector<double> values;     ///< index j = 0..3
    std::vector<double> references; ///< NaN where no closed form is known
    double b_theta = 0.0;
    std::string b_theta_formula = "pi*(1-cos(theta))^2*(2+cos(theta))/3";
};

/// All four quermassintegrals. `reference_radius`, when positive, fills the
/// reference column with r^(3-j) b_theta (the scaled-cap family).
QuermassReport quermass_report(const CapillaryBody& body, double reference_radius = 0.0);
nlohmann::json to_json(const QuermassReport& r);
/// Columns k, value, reference, rel_err.
std::string to_csv(const QuermassReport& r);

/// Normalized elementary symmetric polynomial H_k of the eigenvalues of A[h].
ScalarField h_k_field(const CapGrid& grid, const ScalarField& h, int k);

/// |int f H_{k-1}(A[f]) - int l H_k(A[f])| / max of the two, k in 1..2.
double minkowski_identity_residual(const CapGrid& grid, const ScalarField& f, int k);

struct SteinerFit {
    std::vector<double> t_values;
    std::vector<double> volumes;
    std::vector<double> coefficients; ///< fitted polynomial, degree 0..3
    std::vector<double> predicted;    ///< binom(3,k) * V_k
    std::vector<double> rel_errors;
    double fit_residual = 0.0;
    double max_rel_error = 0.0;
};

/// Fits |K + t C| = V(h + t l, h + t l, h + t l) by least squares over the
/// samples and compares with binom(3, k) V_k. Needs at least 4 distinct t.
SteinerFit steiner_check(const CapGrid& grid, const ScalarField& h, std::span<const double> t_values);

/// Default sampling: 6 equispaced t in [0.1, 2.0].
std::vector<double> default_steiner_samples();

/// max over permutations of |V(perm) - V(id)| / |V(id)|.
double symmetry_residual(const CapGrid& grid, const ScalarField& f1, const ScalarField& f2, const ScalarField& f3);

} // namespace capaf

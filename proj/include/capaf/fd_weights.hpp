#pragma once

#include <Eigen/Core>

#include <span>

namespace capaf {

/// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
/// Column m of the result holds the weights of the m-th derivative at z.
Eigen::MatrixXd fornberg_weights(double z, std::span<const double> nodes, int max_derivative);

/// Integrals over [a, b] of the Lagrange basis polynomials on `nodes`.
Eigen::VectorXd interpolatory_weights(double a, double b, std::span<const double> nodes);

/// Spectral differentiation matrices for n equispaced periodic samples (n even).
Eigen::MatrixXd periodic_d1(int n);
Eigen::MatrixXd periodic_d2(int n);

} // namespace capaf

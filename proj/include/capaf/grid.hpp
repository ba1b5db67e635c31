#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace capaf {

using Index = Eigen::Index;

/// One real value per grid node, ring-major (all azimuths of ring 0, then ring 1, ...).
using ScalarField = Eigen::VectorXd;

/// Symmetric 2-tensor per node in the orthonormal frame {e_rho, e_phi}.
/// Only three components are stored, so symmetry is exact.
struct SymTensorField {
    Eigen::VectorXd rr;
    Eigen::VectorXd rp;
    Eigen::VectorXd pp;

    Index size() const { return rr.size(); }
    Eigen::Matrix2d at(Index node) const
    {
        Eigen::Matrix2d m;
        m << rr[node], rp[node], rp[node], pp[node];
        return m;
    }
};

/// Tangent vector per node, components along e_rho and e_phi.
struct VectorField {
    Eigen::VectorXd rho;
    Eigen::VectorXd phi;
};

/// A radial finite-difference tap. Rings with negative coordinates are
/// reflected through the pole, which maps (rho, phi) to (rho, phi + pi).
struct RadialTap {
    int ring;
    bool flip;
    double weight;
};

using RadialStencil = std::vector<RadialTap>;

inline constexpr int kMinRhoNodes = 8;
inline constexpr int kMinPhiNodes = 8;
inline constexpr int kDefaultRadialOrder = 4;

/// Geodesic polar discretization of the spherical cap of angular radius theta.
///
/// Rings 0..n_rho-1 sit at rho_i = (i + 1/2) * theta / n_rho, so the pole is
/// never a node; ring n_rho is the boundary layer rho = theta. Every ring holds
/// n_phi uniformly spaced azimuths. The grid is immutable and cheap to copy.
class CapGrid {
public:
    double theta() const;
    int n_rho() const;
    int n_phi() const;
    int ring_count() const { return n_rho() + 1; }
    int boundary_ring() const { return n_rho(); }
    Index node_count() const;
    int radial_order() const;

    double d_rho() const;
    double d_phi() const;

    std::span<const double> rho_nodes() const;
    std::span<const double> phi_nodes() const;
    std::span<const Index> boundary_index() const;
    const Eigen::VectorXd& quad_weights() const;

    /// Per-ring trigonometric tables.
    std::span<const double> sin_rho() const;
    std::span<const double> cos_rho() const;

    Index index(int ring, int j) const { return static_cast<Index>(ring) * n_phi() + j; }

    const RadialStencil& d1(int ring) const;
    const RadialStencil& d2(int ring) const;
    /// First-derivative stencil at the boundary ring, two orders higher than d1.
    const RadialStencil& d1_boundary_check() const;
    const Eigen::MatrixXd& fourier_d1() const;
    const Eigen::MatrixXd& fourier_d2() const;

    /// Same theta, node counts and radial order.
    bool same_layout(const CapGrid& other) const;

    struct Impl;

private:
    explicit CapGrid(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    friend CapGrid build_grid(double theta, int n_rho, int n_phi, int radial_order);

    std::shared_ptr<const Impl> impl_;
};

/// Throws Error{InvalidAngle} unless 0 < theta < pi, Error{GridTooCoarse} below
/// the node minima or for odd n_phi. radial_order must be 4 or 6.
CapGrid build_grid(double theta, int n_rho, int n_phi, int radial_order = kDefaultRadialOrder);

/// Evaluate fn(rho, phi) at every node.
template <typename Fn>
ScalarField sample(const CapGrid& grid, Fn&& fn)
{
    ScalarField out(grid.node_count());
    const auto rho = grid.rho_nodes();
    const auto phi = grid.phi_nodes();
    for (int i = 0; i < grid.ring_count(); ++i) {
        for (int j = 0; j < grid.n_phi(); ++j) {
            out[grid.index(i, j)] = fn(rho[i], phi[j]);
        }
    }
    return out;
}

void check_shape(const CapGrid& grid, const ScalarField& f);

ScalarField radial_derivative(const CapGrid& grid, const ScalarField& f);
ScalarField radial_second_derivative(const CapGrid& grid, const ScalarField& f);
ScalarField azimuthal_derivative(const CapGrid& grid, const ScalarField& f);
ScalarField azimuthal_second_derivative(const CapGrid& grid, const ScalarField& f);

/// Covariant Hessian in the orthonormal frame.
SymTensorField hessian(const CapGrid& grid, const ScalarField& f);

/// A[f] = Hess f + f * Id.
SymTensorField a_of(const CapGrid& grid, const ScalarField& f);

/// Quadrature of f over the cap, compensated summation.
double integrate(const CapGrid& grid, const ScalarField& f);

/// d_rho f - cot(theta) f on the boundary ring, one value per azimuth.
Eigen::VectorXd robin_residual(const CapGrid& grid, const ScalarField& f);

/// Per boundary azimuth, |difference| between the radial derivative from d1 and
/// from the higher-order check stencil: an estimate of the truncation error in
/// d_rho f and hence in robin_residual.
Eigen::VectorXd boundary_derivative_error(const CapGrid& grid, const ScalarField& f);

VectorField surface_gradient(const CapGrid& grid, const ScalarField& f);

/// Quadrature-weighted L2 norm.
double l2_norm(const CapGrid& grid, const ScalarField& f);

/// Smaller eigenvalue of each node's 2x2 tensor.
Eigen::VectorXd min_eigenvalue(const SymTensorField& t);

/// Deterministic compensated sum.
double neumaier_sum(std::span<const double> values);

} // namespace capaf

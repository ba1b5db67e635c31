#include "capaf/grid.hpp"

#include "capaf/error.hpp"
#include "capaf/fd_weights.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace capaf {

struct CapGrid::Impl {
    double theta = 0.0;
    int n_rho = 0;
    int n_phi = 0;
    int order = 0;
    double d_rho = 0.0;
    double d_phi = 0.0;
    std::vector<double> rho;
    std::vector<double> phi;
    std::vector<double> sin_rho;
    std::vector<double> cos_rho;
    std::vector<Index> boundary;
    Eigen::VectorXd weights;
    std::vector<RadialStencil> d1;
    std::vector<RadialStencil> d2;
    RadialStencil d1_check;
    Eigen::MatrixXd fd1;
    Eigen::MatrixXd fd2;
};

namespace {

// Extended radial index e: e >= 0 is a real ring, e < 0 is the mirror of ring
// (-e - 1) through the pole.
struct RadialLine {
    double h;
    double theta;
    int n;

    double coord(int e) const
    {
        if (e < 0) {
            return -(static_cast<double>(-e - 1) + 0.5) * h;
        }
        if (e == n) {
            return theta;
        }
        return (static_cast<double>(e) + 0.5) * h;
    }

    RadialTap tap(int e, double w) const
    {
        if (e < 0) {
            return {-e - 1, true, w};
        }
        return {e, false, w};
    }
};

// Window of `size` consecutive extended indices around `center`, clipped so it
// never passes the boundary ring.
int window_start(int center, int size, int last)
{
    int a = center - (size - 1) / 2;
    if (a + size - 1 > last) {
        a = last - size + 1;
    }
    return a;
}

RadialStencil make_stencil(const RadialLine& line, int ring, int size, int derivative)
{
    const int a = window_start(ring, size, line.n);
    std::vector<double> x(size);
    for (int s = 0; s < size; ++s) {
        x[s] = line.coord(a + s);
    }
    const Eigen::MatrixXd c = fornberg_weights(line.coord(ring), x, derivative);
    RadialStencil st;
    st.reserve(size);
    for (int s = 0; s < size; ++s) {
        st.push_back(line.tap(a + s, c(s, derivative)));
    }
    return st;
}

// A centred odd window is symmetric only if it stays on the uniform part of
// the line; the boundary gap is half a spacing.
bool centred_window_is_uniform(int ring, int size, int n)
{
    return ring + (size - 1) / 2 <= n - 1;
}

} // namespace

CapGrid build_grid(double theta, int n_rho, int n_phi, int radial_order)
{
    if (!(theta > 0.0 && theta < std::numbers::pi)) {
        throw Error(ErrorCode::InvalidAngle, "theta must lie in (0, pi), got " + std::to_string(theta));
    }
    if (n_rho < kMinRhoNodes || n_phi < kMinPhiNodes || n_phi % 2 != 0) {
        throw Error(ErrorCode::GridTooCoarse,
                    "need n_rho >= 8 and even n_phi >= 8, got " + std::to_string(n_rho) + "x" +
                        std::to_string(n_phi));
    }
    if (radial_order != 4 && radial_order != 6) {
        throw Error(ErrorCode::GridTooCoarse, "radial order must be 4 or 6");
    }

    auto impl = std::make_shared<CapGrid::Impl>();
    impl->theta = theta;
    impl->n_rho = n_rho;
    impl->n_phi = n_phi;
    impl->order = radial_order;
    impl->d_rho = theta / n_rho;
    impl->d_phi = 2.0 * std::numbers::pi / n_phi;

    const RadialLine line{impl->d_rho, theta, n_rho};
    for (int i = 0; i <= n_rho; ++i) {
        const double r = line.coord(i);
        impl->rho.push_back(r);
        impl->sin_rho.push_back(std::sin(r));
        impl->cos_rho.push_back(std::cos(r));
    }
    for (int j = 0; j < n_phi; ++j) {
        impl->phi.push_back(j * impl->d_phi);
    }
    for (int j = 0; j < n_phi; ++j) {
        impl->boundary.push_back(static_cast<Index>(n_rho) * n_phi + j);
    }

    const int p = radial_order;
    for (int i = 0; i <= n_rho; ++i) {
        impl->d1.push_back(make_stencil(line, i, p + 1, 1));
        const int size2 = centred_window_is_uniform(i, p + 1, n_rho) ? p + 1 : p + 2;
        impl->d2.push_back(make_stencil(line, i, size2, 2));
    }
    impl->d1_check = make_stencil(line, n_rho, p + 3, 1);

    // Radial quadrature: integrate a local interpolant of (phi-mean * sin rho)
    // over each cell [c h, (c+1) h]. The integrand is odd through the pole, so
    // mirrored taps carry sin of their (negative) coordinate.
    std::vector<double> ring_weight(n_rho + 1, 0.0);
    const int q = p + 1;
    for (int c = 0; c < n_rho; ++c) {
        const int a = window_start(c, q, n_rho);
        std::vector<double> x(q);
        for (int s = 0; s < q; ++s) {
            x[s] = line.coord(a + s);
        }
        const Eigen::VectorXd cw = interpolatory_weights(c * impl->d_rho, (c + 1) * impl->d_rho, x);
        for (int s = 0; s < q; ++s) {
            const RadialTap t = line.tap(a + s, cw[s]);
            ring_weight[t.ring] += cw[s] * std::sin(x[s]);
        }
    }
    impl->weights.resize(static_cast<Index>(n_rho + 1) * n_phi);
    for (int i = 0; i <= n_rho; ++i) {
        for (int j = 0; j < n_phi; ++j) {
            impl->weights[static_cast<Index>(i) * n_phi + j] = ring_weight[i] * impl->d_phi;
        }
    }

    impl->fd1 = periodic_d1(n_phi);
    impl->fd2 = periodic_d2(n_phi);
    return CapGrid(std::move(impl));
}

double CapGrid::theta() const { return impl_->theta; }
int CapGrid::n_rho() const { return impl_->n_rho; }
int CapGrid::n_phi() const { return impl_->n_phi; }
Index CapGrid::node_count() const { return static_cast<Index>(impl_->n_rho + 1) * impl_->n_phi; }
int CapGrid::radial_order() const { return impl_->order; }
double CapGrid::d_rho() const { return impl_->d_rho; }
double CapGrid::d_phi() const { return impl_->d_phi; }
std::span<const double> CapGrid::rho_nodes() const { return impl_->rho; }
std::span<const double> CapGrid::phi_nodes() const { return impl_->phi; }
std::span<const Index> CapGrid::boundary_index() const { return impl_->boundary; }
const Eigen::VectorXd& CapGrid::quad_weights() const { return impl_->weights; }
std::span<const double> CapGrid::sin_rho() const { return impl_->sin_rho; }
std::span<const double> CapGrid::cos_rho() const { return impl_->cos_rho; }
const RadialStencil& CapGrid::d1(int ring) const { return impl_->d1[ring]; }
const RadialStencil& CapGrid::d2(int ring) const { return impl_->d2[ring]; }
const RadialStencil& CapGrid::d1_boundary_check() const { return impl_->d1_check; }
const Eigen::MatrixXd& CapGrid::fourier_d1() const { return impl_->fd1; }
const Eigen::MatrixXd& CapGrid::fourier_d2() const { return impl_->fd2; }

bool CapGrid::same_layout(const CapGrid& other) const
{
    return impl_ == other.impl_ ||
           (impl_->theta == other.impl_->theta && impl_->n_rho == other.impl_->n_rho &&
            impl_->n_phi == other.impl_->n_phi && impl_->order == other.impl_->order);
}

void check_shape(const CapGrid& grid, const ScalarField& f)
{
    if (f.size() != grid.node_count()) {
        throw Error(ErrorCode::ShapeMismatch, "field has " + std::to_string(f.size()) + " values, grid has " +
                                                  std::to_string(grid.node_count()) + " nodes");
    }
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ScalarField apply_radial(const CapGrid& grid, const ScalarField& f, bool second)
{
    check_shape(grid, f);
    const int np = grid.n_phi();
    const int half = np / 2;
    ScalarField out = ScalarField::Zero(f.size());
    for (int i = 0; i < grid.ring_count(); ++i) {
        const RadialStencil& st = second ? grid.d2(i) : grid.d1(i);
        for (const RadialTap& t : st) {
            const Index src = static_cast<Index>(t.ring) * np;
            const Index dst = static_cast<Index>(i) * np;
            if (t.flip) {
                for (int j = 0; j < np; ++j) {
                    out[dst + j] += t.weight * f[src + (j + half) % np];
                }
            } else {
                out.segment(dst, np) += t.weight * f.segment(src, np);
            }
        }
    }
    return out;
}

ScalarField apply_azimuthal(const CapGrid& grid, const ScalarField& f, const Eigen::MatrixXd& d)
{
    check_shape(grid, f);
    Eigen::Map<const RowMajor> in(f.data(), grid.ring_count(), grid.n_phi());
    ScalarField out(f.size());
    Eigen::Map<RowMajor> res(out.data(), grid.ring_count(), grid.n_phi());
    res.noalias() = in * d.transpose();
    return out;
}

} // namespace

ScalarField radial_derivative(const CapGrid& grid, const ScalarField& f) { return apply_radial(grid, f, false); }

ScalarField radial_second_derivative(const CapGrid& grid, const ScalarField& f)
{
    return apply_radial(grid, f, true);
}

ScalarField azimuthal_derivative(const CapGrid& grid, const ScalarField& f)
{
    return apply_azimuthal(grid, f, grid.fourier_d1());
}

ScalarField azimuthal_second_derivative(const CapGrid& grid, const ScalarField& f)
{
    return apply_azimuthal(grid, f, grid.fourier_d2());
}

SymTensorField hessian(const CapGrid& grid, const ScalarField& f)
{
    const ScalarField fr = radial_derivative(grid, f);
    const ScalarField frr = radial_second_derivative(grid, f);
    const ScalarField fp = azimuthal_derivative(grid, f);
    const ScalarField fpp = azimuthal_second_derivative(grid, f);
    const ScalarField frp = radial_derivative(grid, fp);

    SymTensorField h;
    h.rr = frr;
    h.rp.resize(f.size());
    h.pp.resize(f.size());
    const int np = grid.n_phi();
    for (int i = 0; i < grid.ring_count(); ++i) {
        const double s = grid.sin_rho()[i];
        const double cot = grid.cos_rho()[i] / s;
        for (int j = 0; j < np; ++j) {
            const Index k = grid.index(i, j);
            h.rp[k] = (frp[k] - cot * fp[k]) / s;
            h.pp[k] = fpp[k] / (s * s) + cot * fr[k];
        }
    }
    return h;
}

SymTensorField a_of(const CapGrid& grid, const ScalarField& f)
{
    SymTensorField a = hessian(grid, f);
    a.rr += f;
    a.pp += f;
    return a;
}

double neumaier_sum(std::span<const double> values)
{
    double sum = 0.0;
    double comp = 0.0;
    for (const double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

double integrate(const CapGrid& grid, const ScalarField& f)
{
    check_shape(grid, f);
    const Eigen::VectorXd prod = f.cwiseProduct(grid.quad_weights());
    return neumaier_sum(std::span<const double>(prod.data(), static_cast<std::size_t>(prod.size())));
}

Eigen::VectorXd robin_residual(const CapGrid& grid, const ScalarField& f)
{
    check_shape(grid, f);
    const int np = grid.n_phi();
    const int n = grid.boundary_ring();
    const int half = np / 2;
    const double cot = 1.0 / std::tan(grid.theta());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(np);
    for (const RadialTap& t : grid.d1(n)) {
        for (int j = 0; j < np; ++j) {
            const int jj = t.flip ? (j + half) % np : j;
            out[j] += t.weight * f[grid.index(t.ring, jj)];
        }
    }
    for (int j = 0; j < np; ++j) {
        out[j] -= cot * f[grid.index(n, j)];
    }
    return out;
}

Eigen::VectorXd boundary_derivative_error(const CapGrid& grid, const ScalarField& f)
{
    check_shape(grid, f);
    const int np = grid.n_phi();
    const int half = np / 2;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(np);
    auto accumulate = [&](const RadialStencil& st, double sign) {
        for (const RadialTap& t : st) {
            for (int j = 0; j < np; ++j) {
                const int jj = t.flip ? (j + half) % np : j;
                out[j] += sign * t.weight * f[grid.index(t.ring, jj)];
            }
        }
    };
    accumulate(grid.d1(grid.boundary_ring()), 1.0);
    accumulate(grid.d1_boundary_check(), -1.0);
    return out.cwiseAbs();
}

VectorField surface_gradient(const CapGrid& grid, const ScalarField& f)
{
    VectorField g;
    g.rho = radial_derivative(grid, f);
    g.phi = azimuthal_derivative(grid, f);
    const int np = grid.n_phi();
    for (int i = 0; i < grid.ring_count(); ++i) {
        g.phi.segment(static_cast<Index>(i) * np, np) /= grid.sin_rho()[i];
    }
    return g;
}

double l2_norm(const CapGrid& grid, const ScalarField& f)
{
    return std::sqrt(std::max(0.0, integrate(grid, f.cwiseAbs2())));
}

Eigen::VectorXd min_eigenvalue(const SymTensorField& t)
{
    Eigen::VectorXd out(t.size());
    for (Index k = 0; k < t.size(); ++k) {
        const double mean = 0.5 * (t.rr[k] + t.pp[k]);
        const double dev = 0.5 * (t.rr[k] - t.pp[k]);
        out[k] = mean - std::hypot(dev, t.rp[k]);
    }
    return out;
}

} // namespace capaf

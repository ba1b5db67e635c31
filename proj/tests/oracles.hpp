// Independent reference computations shared by the unit and acceptance tests.
#pragma once

#include "capaf/grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using capaf::CapGrid;
using capaf::Index;
using capaf::ScalarField;
using capaf::SymTensorField;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo, double hi)
    {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Least-squares slope of log(err) against log(h).
inline double observed_order(const std::vector<double>& h, const std::vector<double>& err)
{
    const std::size_t n = h.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(h[i]);
        my += std::log(err[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (std::log(h[i]) - mx) * (std::log(err[i]) - my);
        sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
    }
    return sxy / sxx;
}

using Ambient = std::function<double(double, double, double)>;

/// Covariant Hessian of F restricted to the unit sphere, from the ambient
/// derivatives: Hess f(X, Y) = D^2 F(X, Y) - <grad F, P> <X, Y>. Derivatives
/// use fourth-order central differences, exact for cubic F up to rounding.
inline SymTensorField ambient_hessian(const CapGrid& g, const Ambient& F)
{
    const double s = 1e-2;
    auto d1 = [&](const Eigen::Vector3d& p, int a) {
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        e[a] = s;
        auto f = [&](double k) { return F(p[0] + k * e[0], p[1] + k * e[1], p[2] + k * e[2]); };
        return (-f(2) + 8 * f(1) - 8 * f(-1) + f(-2)) / (12 * s);
    };
    auto d2 = [&](const Eigen::Vector3d& p, int a, int b) {
        Eigen::Vector3d ea = Eigen::Vector3d::Zero();
        Eigen::Vector3d eb = Eigen::Vector3d::Zero();
        ea[a] = s;
        eb[b] = s;
        auto f = [&](double i, double j) {
            const Eigen::Vector3d q = p + i * ea + j * eb;
            return F(q[0], q[1], q[2]);
        };
        if (a == b) {
            return (-f(2, 0) + 16 * f(1, 0) - 30 * f(0, 0) + 16 * f(-1, 0) - f(-2, 0)) / (12 * s * s);
        }
        const double w[4] = {1, -8, 8, -1};
        const double k[4] = {-2, -1, 1, 2};
        double acc = 0;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                acc += w[i] * w[j] * f(k[i], k[j]);
            }
        }
        return acc / (144 * s * s);
    };

    SymTensorField out{ScalarField(g.node_count()), ScalarField(g.node_count()), ScalarField(g.node_count())};
    for (int i = 0; i < g.ring_count(); ++i) {
        const double r = g.rho_nodes()[i];
        for (int j = 0; j < g.n_phi(); ++j) {
            const double ph = g.phi_nodes()[j];
            const Eigen::Vector3d p(std::sin(r) * std::cos(ph), std::sin(r) * std::sin(ph), std::cos(r));
            const Eigen::Vector3d er(std::cos(r) * std::cos(ph), std::cos(r) * std::sin(ph), -std::sin(r));
            const Eigen::Vector3d ep(-std::sin(ph), std::cos(ph), 0);
            Eigen::Vector3d grad;
            Eigen::Matrix3d hess;
            for (int a = 0; a < 3; ++a) {
                grad[a] = d1(p, a);
                for (int b = 0; b < 3; ++b) {
                    hess(a, b) = d2(p, a, b);
                }
            }
            const double normal = grad.dot(p);
            const Index k = g.index(i, j);
            out.rr[k] = er.dot(hess * er) - normal;
            out.rp[k] = er.dot(hess * ep);
            out.pp[k] = ep.dot(hess * ep) - normal;
        }
    }
    return out;
}

/// Sample an ambient function on the grid.
inline ScalarField restrict(const CapGrid& g, const Ambient& F)
{
    return capaf::sample(g, [&](double r, double p) {
        return F(std::sin(r) * std::cos(p), std::sin(r) * std::sin(p), std::cos(r));
    });
}

/// Random smooth field: restriction of a random cubic polynomial.
inline ScalarField smooth_field(const CapGrid& g, Rng& rng)
{
    double c[20];
    for (double& v : c) {
        v = rng.uniform(-1, 1);
    }
    return capaf::sample(g, [&](double r, double p) {
        const double x = std::sin(r) * std::cos(p);
        const double y = std::sin(r) * std::sin(p);
        const double z = std::cos(r);
        const double m[20] = {1,         x,         y,         z,         x * x,     y * y,     z * z,
                              x * y,     x * z,     y * z,     x * x * x, y * y * y, z * z * z, x * x * y,
                              x * x * z, y * y * x, y * y * z, z * z * x, z * z * y, x * y * z};
        double acc = 0;
        for (int i = 0; i < 20; ++i) {
            acc += c[i] * m[i];
        }
        return acc;
    });
}

/// Volume of the solid spherical cap of the unit sphere below height 1 - cos(theta).
inline double solid_cap_volume(double theta)
{
    // integral over heights z in [cos(theta), 1] of pi (1 - z^2) dz
    const double c = std::cos(theta);
    const double upper = 1.0 - 1.0 / 3.0;
    const double lower = c - c * c * c / 3.0;
    return std::numbers::pi * (upper - lower);
}

} // namespace oracle

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "capaf/error.hpp"
#include "capaf/grid.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace capaf;
using std::numbers::pi;

TEST_CASE("grid layout and quadrature weights")
{
    const CapGrid g = build_grid(pi / 2, 64, 64);
    CHECK(g.node_count() == 65 * 64);
    CHECK(g.rho_nodes().front() > 0.0);
    CHECK(g.rho_nodes()[g.boundary_ring()] == pi / 2);
    CHECK(g.boundary_index().size() == 64);
    CHECK(g.quad_weights().minCoeff() > 0.0);
    CHECK(g.quad_weights().sum() == doctest::Approx(2 * pi).epsilon(1e-6));

    const CapGrid g2 = build_grid(2 * pi / 3, 64, 64);
    CHECK(g2.quad_weights().sum() == doctest::Approx(3 * pi).epsilon(1e-6));
}

TEST_CASE("weights stay positive across angles and resolutions")
{
    for (const double theta : {0.1, 0.5, 1.0, pi / 2, 2.2, 2.9, 3.1}) {
        for (const int n : {8, 16, 33, 64}) {
            const CapGrid g = build_grid(theta, n, 2 * (n / 2) + 8);
            CHECK(g.quad_weights().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("grid construction errors")
{
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    CHECK(code_of([] { build_grid(pi / 2, 4, 4); }) == ErrorCode::GridTooCoarse);
    CHECK(code_of([] { build_grid(pi / 2, 16, 17); }) == ErrorCode::GridTooCoarse);
    CHECK(code_of([] { build_grid(0.0, 16, 16); }) == ErrorCode::InvalidAngle);
    CHECK(code_of([] { build_grid(pi, 16, 16); }) == ErrorCode::InvalidAngle);
    CHECK(code_of([] { build_grid(-1.0, 16, 16); }) == ErrorCode::InvalidAngle);
    CHECK(code_of([] { build_grid(1.0, 16, 16, 5); }) == ErrorCode::GridTooCoarse);
}

TEST_CASE("hessian of closed-form fields")
{
    for (const double theta : {0.5, pi / 2, 2.9}) {
        const CapGrid g = build_grid(theta, 64, 64);
        const double c = std::cos(theta);

        SUBCASE("A[l] is the identity")
        {
            const ScalarField l = sample(g, [c](double r, double) { return 1 - c * std::cos(r); });
            const SymTensorField a = a_of(g, l);
            CHECK((a.rr.array() - 1).abs().maxCoeff() < 1e-5);
            CHECK((a.pp.array() - 1).abs().maxCoeff() < 1e-5);
            CHECK(a.rp.cwiseAbs().maxCoeff() < 1e-5);
        }
        SUBCASE("A of a horizontal linear vanishes")
        {
            const ScalarField f = sample(g, [](double r, double p) { return std::sin(r) * std::cos(p); });
            const SymTensorField a = a_of(g, f);
            CHECK(a.rr.cwiseAbs().maxCoeff() < 1e-5);
            CHECK(a.pp.cwiseAbs().maxCoeff() < 1e-5);
            CHECK(a.rp.cwiseAbs().maxCoeff() < 1e-5);
        }
        SUBCASE("constant field")
        {
            // rounding in the angular second derivative is amplified by 1 / sin^2 near the pole

            const SymTensorField h = hessian(g, ScalarField::Ones(g.node_count()));
            CHECK(h.rr.cwiseAbs().maxCoeff() < 1e-9);
            CHECK(h.rp.cwiseAbs().maxCoeff() < 1e-7);
            CHECK(h.pp.cwiseAbs().maxCoeff() < 1e-7);
        }
    }
}

TEST_CASE("hessian matches a finite-difference oracle and converges")
{
    // restriction of a cubic polynomial in the ambient coordinates
    const oracle::Ambient fn = [](double x, double y, double z) {
        return x * x * z + 0.7 * y * z * z - 0.4 * x * y + 0.3 * y;
    };
    for (const double theta : {0.7, 2.4}) {
        std::vector<double> errors;
        std::vector<double> spacing;
        for (const int n : {32, 64, 128}) {
            const CapGrid g = build_grid(theta, n, n);
            const SymTensorField h = hessian(g, oracle::restrict(g, fn));
            const SymTensorField ref = oracle::ambient_hessian(g, fn);
            const ScalarField err2 = (h.rr - ref.rr).cwiseAbs2() + 2 * (h.rp - ref.rp).cwiseAbs2() +
                                     (h.pp - ref.pp).cwiseAbs2();
            errors.push_back(std::sqrt(integrate(g, err2)));
            spacing.push_back(g.d_rho());
        }
        CHECK(errors.back() < 5e-6);
        CHECK(oracle::observed_order(spacing, errors) >= 3.5);
    }
}

TEST_CASE("integration against closed forms")
{
    for (const double theta : {pi / 6, pi / 2, 2.5}) {
        const CapGrid g = build_grid(theta, 128, 128);
        const double c = std::cos(theta);
        CHECK(integrate(g, ScalarField::Ones(g.node_count())) == doctest::Approx(2 * pi * (1 - c)).epsilon(1e-10));
        const ScalarField l = sample(g, [c](double r, double) { return 1 - c * std::cos(r); });
        CHECK(integrate(g, l) == doctest::Approx(pi * (1 - c) * (1 - c) * (2 + c)).epsilon(1e-10));
        const ScalarField lin = sample(g, [](double r, double p) { return std::sin(r) * std::cos(p); });
        CHECK(std::abs(integrate(g, lin)) < 1e-12);

        // cos(rho)^k cos(m phi): 2 pi (1 - c^(k+1)) / (k+1) for m = 0, zero otherwise
        for (int k = 0; k <= 6; ++k) {
            for (int m = 0; m <= 3; ++m) {
                const ScalarField f =
                    sample(g, [k, m](double r, double p) { return std::pow(std::cos(r), k) * std::cos(m * p); });
                const double exact = m == 0 ? 2 * pi * (1 - std::pow(c, k + 1)) / (k + 1) : 0.0;
                const double scale = std::max(1.0, std::abs(exact));
                CHECK(std::abs(integrate(g, f) - exact) / scale <= 1e-8);
            }
        }
    }
}

TEST_CASE("robin residual of reference fields")
{
    for (const double theta : {0.5, pi / 3, pi / 2, 2.9}) {
        const CapGrid g = build_grid(theta, 64, 64);
        const double c = std::cos(theta);
        const ScalarField l = sample(g, [c](double r, double) { return 1 - c * std::cos(r); });
        CHECK(robin_residual(g, l).cwiseAbs().maxCoeff() < 1e-6);
        const ScalarField lin = sample(g, [](double r, double p) { return std::sin(r) * std::cos(p); });
        CHECK(robin_residual(g, lin).cwiseAbs().maxCoeff() < 1e-6);
        const Eigen::VectorXd one = robin_residual(g, ScalarField::Ones(g.node_count()));
        CHECK(one.size() == 64);
        CHECK((one.array() + c / std::sin(theta)).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("surface gradient")
{
    const double theta = 1.1;
    const CapGrid g = build_grid(theta, 64, 64);
    const double c = std::cos(theta);
    const VectorField gl = surface_gradient(g, sample(g, [c](double r, double) { return 1 - c * std::cos(r); }));
    const ScalarField expected = sample(g, [c](double r, double) { return c * std::sin(r); });
    CHECK((gl.rho - expected).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(gl.phi.cwiseAbs().maxCoeff() < 1e-11);

    const VectorField g1 = surface_gradient(g, ScalarField::Constant(g.node_count(), 3.0));
    CHECK(g1.rho.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(g1.phi.cwiseAbs().maxCoeff() < 1e-9);

    const VectorField glin = surface_gradient(g, sample(g, [](double r, double p) { return std::sin(r) * std::cos(p); }));
    CHECK((glin.rho - sample(g, [](double r, double p) { return std::cos(r) * std::cos(p); })).cwiseAbs().maxCoeff() <
          1e-7);
    CHECK((glin.phi + sample(g, [](double, double p) { return std::sin(p); })).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a_of is linear")
{
    const CapGrid g = build_grid(0.9, 32, 32);
    oracle::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ScalarField f = oracle::smooth_field(g, rng);
        const ScalarField h = oracle::smooth_field(g, rng);
        const double a = rng.uniform(-2, 2);
        const double b = rng.uniform(-2, 2);
        const SymTensorField lhs = a_of(g, a * f + b * h);
        const SymTensorField af = a_of(g, f);
        const SymTensorField ah = a_of(g, h);
        const double scale = 1.0 + af.rr.cwiseAbs().maxCoeff() + ah.rr.cwiseAbs().maxCoeff() +
                             af.pp.cwiseAbs().maxCoeff() + ah.pp.cwiseAbs().maxCoeff();
        CHECK((lhs.rr - a * af.rr - b * ah.rr).cwiseAbs().maxCoeff() <= 1e-9 * scale);
        CHECK((lhs.rp - a * af.rp - b * ah.rp).cwiseAbs().maxCoeff() <= 1e-9 * scale);
        CHECK((lhs.pp - a * af.pp - b * ah.pp).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    }
}

TEST_CASE("mixed boundary hessian component vanishes for Robin fields")
{
    // l * u with d_rho u = 0 at the boundary satisfies the Robin condition
    const double theta = 2.0;
    std::vector<double> errs;
    std::vector<double> hs;
    for (const int n : {32, 64, 128}) {
        const CapGrid g = build_grid(theta, n, n);
        const double c = std::cos(theta);
        const ScalarField f = sample(g, [&](double r, double p) {
            const double s = r / theta;
            return (1 - c * std::cos(r)) * (1 + 0.3 * (s * s - 0.5 * s * s * s * s) * std::cos(2 * p)) +
                   0.2 * std::sin(r) * std::sin(p);
        });
        const SymTensorField h = hessian(g, f);
        double worst = 0.0;
        for (const Index k : g.boundary_index()) {
            worst = std::max(worst, std::abs(h.rp[k]));
        }
        errs.push_back(worst);
        hs.push_back(g.d_rho());
    }
    CHECK(errs.back() < 1e-5);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[1] < errs[0]);
}

TEST_CASE("compensated summation")
{
    const std::vector<double> v{1e16, 1.0, -1e16, 1.0};
    CHECK(neumaier_sum(v) == 2.0);
}

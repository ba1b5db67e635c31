#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "capaf/capfun.hpp"
#include "capaf/error.hpp"
#include "capaf/mixedvol.hpp"
#include "capaf/reconstruct.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

using namespace capaf;
using std::numbers::pi;

namespace {

// xi = (sin rho cos phi, sin rho sin phi, cos rho - cos theta)
Points cap_points(const CapGrid& g)
{
    Points xi(g.node_count(), 3);
    const auto rho = g.rho_nodes();
    const auto phi = g.phi_nodes();
    for (int i = 0; i < g.ring_count(); ++i) {
        for (int j = 0; j < g.n_phi(); ++j) {
            const Index k = g.index(i, j);
            xi(k, 0) = std::sin(rho[i]) * std::cos(phi[j]);
            xi(k, 1) = std::sin(rho[i]) * std::sin(phi[j]);
            xi(k, 2) = std::cos(rho[i]) - std::cos(g.theta());
        }
    }
    return xi;
}

} // namespace

TEST_CASE("cap embeds onto itself")
{
    for (const double theta : {0.6, pi / 2, 2.4}) {
        const CapGrid g = build_grid(theta, 64, 64);
        const EmbeddedPatch p = embed(ell(g));
        CHECK(p.positions.rows() == static_cast<Index>(g.n_rho() + 1) * g.n_phi());
        CHECK((p.positions - cap_points(g)).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((p.normals.rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-15);
        CHECK(contact_angle_residual(p) < 1e-15);
        CHECK(planarity_residual(p) < 1e-6);
        CHECK(interior_min_height(p) > 0.0);
        CHECK(degenerate_triangles(p).empty());
    }
}

TEST_CASE("scaled cap lies on the sphere of radius r")
{
    const double theta = 1.1;
    const double r = 2.5;
    const CapGrid g = build_grid(theta, 64, 64);
    const std::vector<CapillaryBody> one{ell(g)};
    const std::vector<double> w{r};
    const EmbeddedPatch p = embed(minkowski_combine(one, w));
    double worst = 0.0;
    for (Index k = 0; k < p.positions.rows(); ++k) {
        Eigen::Vector3d x = p.positions.row(k).transpose();
        x.z() -= -r * std::cos(theta); // center r cos(theta) e with e = -E3
        worst = std::max(worst, std::abs(x.norm() - r));
    }
    CHECK(worst < 1e-4 * r);
}

TEST_CASE("translation shifts the surface")
{
    // exact in h; the gradient of the linear part carries the radial FD error
    std::vector<double> errs;
    std::vector<double> hs;
    for (const int n : {32, 64, 128}) {
        const CapGrid g = build_grid(2.0, n, n);
        const CapillaryBody b = random_body(g, {.seed = 6});
        const Points d = embed(translate(b, 0.4, -0.1)).positions - embed(b).positions;
        errs.push_back(std::max({(d.col(0).array() - 0.4).abs().maxCoeff(), (d.col(1).array() + 0.1).abs().maxCoeff(),
                                 d.col(2).cwiseAbs().maxCoeff()}));
        hs.push_back(g.d_rho());
    }
    CHECK(errs.back() < 1e-8);
    CHECK(oracle::observed_order(hs, errs) >= 3.5);
}

TEST_CASE("contact angle and planarity")
{
    const double theta = 2.3;
    std::vector<double> errs;
    std::vector<double> hs;
    for (const int n : {32, 64, 128}) {
        const CapGrid g = build_grid(theta, n, n);
        const EmbeddedPatch p = embed(random_body(g, {.seed = 21}));
        CHECK(contact_angle_residual(p) < 1e-15);
        CHECK(interior_min_height(p) > 0.0);
        errs.push_back(planarity_residual(p));
        hs.push_back(g.d_rho());
    }
    CHECK(errs.back() < 1e-5);
    CHECK(oracle::observed_order(hs, errs) >= 3.5);

    const CapGrid g = build_grid(theta, 64, 64);
    EmbeddedPatch tilted = embed(ell(g));
    for (const Index k : tilted.boundary) {
        tilted.normals(k, 2) += 0.1;
    }
    CHECK(contact_angle_residual(tilted) > 0.05);

    // constant support data violates the Robin condition; the ring lifts off the plane by |cos theta|
    const EmbeddedPatch broken = embed(g, ScalarField::Ones(g.node_count()));
    CHECK(planarity_residual(broken) == doctest::Approx(std::abs(std::cos(theta))).epsilon(1e-6));
}

TEST_CASE("enclosed volume")
{
    const CapGrid half = build_grid(pi / 2, 128, 128);
    CHECK(enclosed_volume(embed(ell(half))) == doctest::Approx(2 * pi / 3).epsilon(1e-3));
    for (const double theta : {0.5, 1.9, 2.8}) {
        const CapGrid g = build_grid(theta, 128, 128);
        const double oracle_volume = oracle::solid_cap_volume(theta);
        CHECK(enclosed_volume(embed(ell(g))) == doctest::Approx(oracle_volume).epsilon(1e-3));
        const CapillaryBody b = random_body(g, {.seed = 2});
        const double v0 = quermassintegral(b, 0);
        CHECK(std::abs(enclosed_volume(embed(b)) - v0) <= 1e-3 * v0);
    }
    // second order in the triangulation
    std::vector<double> errs;
    std::vector<double> hs;
    for (const int n : {16, 32, 64}) {
        const CapGrid g = build_grid(1.2, n, n);
        errs.push_back(std::abs(enclosed_volume(embed(ell(g))) - oracle::solid_cap_volume(1.2)));
        hs.push_back(g.d_rho());
    }
    CHECK(oracle::observed_order(hs, errs) >= 1.8);
}

TEST_CASE("principal radii")
{
    const CapGrid g = build_grid(1.7, 48, 48);
    const auto cap = principal_radii(ell(g));
    CHECK((cap[0].array() - 1.0).abs().maxCoeff() < 1e-5);
    CHECK((cap[1].array() - 1.0).abs().maxCoeff() < 1e-5);

    const std::vector<CapillaryBody> one{ell(g)};
    const std::vector<double> w{3.0};
    const auto scaled = principal_radii(minkowski_combine(one, w));
    CHECK((scaled[0].array() - 3.0).abs().maxCoeff() < 3e-5);
    CHECK((scaled[1].array() - 3.0).abs().maxCoeff() < 3e-5);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const CapillaryBody b = random_body(g, {.seed = seed, .base_radius = 1.4});
        const auto r = principal_radii(b);
        CHECK(r[0].minCoeff() >= 0.05 * 1.4);
        CHECK((r[1] - r[0]).minCoeff() >= 0.0);
    }
}

TEST_CASE("boundary form of quermassintegrals")
{
    for (const double theta : {0.5, pi / 2, 2.5}) {
        const CapGrid g = build_grid(theta, 64, 64);
        const double b = oracle::solid_cap_volume(theta);
        const CapillaryBody cap = ell(g);
        const BoundaryCurve curve = boundary_curve(embed(cap));
        CHECK(curve.length == doctest::Approx(2 * pi * std::sin(theta)).epsilon(1e-6));
        CHECK(curve.total_curvature == doctest::Approx(2 * pi).epsilon(1e-9));
        for (int k = 1; k <= 2; ++k) {
            CHECK(boundary_form_quermass(cap, k) == doctest::Approx(b).epsilon(1e-5));
        }
    }
    const CapGrid g = build_grid(2.1, 128, 128);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const CapillaryBody body = random_body(g, {.seed = seed});
        for (int k = 1; k <= 2; ++k) {
            const double mv = quermassintegral(body, k + 1);
            CHECK(std::abs(boundary_form_quermass(body, k) - mv) <= 1e-3 * std::abs(mv));
        }
    }
    CHECK_THROWS_AS(boundary_form_quermass(ell(g), 0), Error);
    CHECK_THROWS_AS(boundary_form_quermass(ell(g), 3), Error);
}

TEST_CASE("parallel bodies")
{
    const CapGrid g = build_grid(1.3, 48, 48);
    const ParallelBody two = parallel_body(ell(g), 1.0);
    CHECK((two.body.values() - 2.0 * ell_values(g)).cwiseAbs().maxCoeff() == 0.0);

    const CapillaryBody b = random_body(g, {.seed = 9});
    const ParallelBody p = parallel_body(b, 0.5);
    CHECK((p.body.values() - b.values() - 0.5 * ell_values(g)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(p.linearity_error < 1e-12);
    CHECK(p.displacement_error < 1e-4);

    const ParallelBody tiny = parallel_body(b, 1e-12);
    CHECK((embed(tiny.body).positions - embed(b).positions).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(parallel_body(b, 0.0), Error);
    CHECK_THROWS_AS(parallel_body(b, -1.0), Error);
}

TEST_CASE("mesh normals converge to nu")
{
    std::vector<double> errs;
    for (const int n : {16, 32, 64}) {
        const CapGrid g = build_grid(1.0, n, n);
        errs.push_back(vertex_normal_deviation(embed(random_body(g, {.seed = 5}))));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[2] < 0.05);
}

TEST_CASE("OBJ export round-trips")
{
    const CapGrid g = build_grid(2.2, 24, 32);
    const EmbeddedPatch p = embed(random_body(g, {.seed = 13}));
    const auto path = std::filesystem::temp_directory_path() / "capaf_patch.obj";
    export_mesh(p, path.string());
    const MeshData m = import_mesh(path.string());
    std::filesystem::remove(path);
    CHECK(m.positions.rows() == 24 * 32 + 32);
    CHECK((m.positions.array() == p.positions.array()).all());
    CHECK((m.normals.array() == p.normals.array()).all());
    CHECK(m.triangles == p.triangles);

    CHECK_THROWS_AS(export_mesh(p, "/nonexistent/dir/x.obj"), Error);
    CHECK_THROWS_AS(import_mesh("/nonexistent/x.obj"), Error);
}

TEST_CASE("triangles face along nu")
{
    const CapGrid g = build_grid(0.9, 32, 32);
    const EmbeddedPatch p = embed(ell(g));
    for (const Triangle& t : p.triangles) {
        const Eigen::Vector3d a = p.positions.row(t[0]).transpose();
        const Eigen::Vector3d n =
            (Eigen::Vector3d(p.positions.row(t[1]).transpose()) - a).cross(Eigen::Vector3d(p.positions.row(t[2]).transpose()) - a);
        CHECK(n.dot(p.normals.row(t[0]).transpose()) > 0.0);
    }
}

TEST_CASE("patch summary")
{
    const CapGrid g = build_grid(2.0, 32, 32);
    const CapillaryBody b = random_body(g, {.seed = 3});
    const nlohmann::json j = patch_summary(b, embed(b));
    CHECK(j["vertices"] == 33 * 32);
    CHECK(j["boundary_form"].size() == 2);
    CHECK(j["degenerate_triangles"] == 0);
    CHECK(j["contact_angle_residual"].get<double>() < 1e-15);
}

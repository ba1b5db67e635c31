#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "capaf/capfun.hpp"
#include "capaf/error.hpp"
#include "capaf/mixedvol.hpp"
#include "oracles.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

using namespace capaf;
using std::numbers::pi;

namespace {

Eigen::MatrixXd random_symmetric(oracle::Rng& rng, int n)
{
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            m(i, j) = m(j, i) = rng.uniform(-1, 1);
        }
    }
    return m;
}

Eigen::MatrixXd random_positive(oracle::Rng& rng, int n)
{
    const Eigen::MatrixXd g = random_symmetric(rng, n);
    return g * g.transpose() + 0.05 * Eigen::MatrixXd::Identity(n, n);
}

ScalarField lin1(const CapGrid& g)
{
    return sample(g, [](double r, double p) { return std::sin(r) * std::cos(p); });
}

} // namespace

TEST_CASE("mixed discriminant closed values")
{
    const std::vector<Eigen::MatrixXd> id{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    CHECK(mixed_discriminant(id) == doctest::Approx(1.0).epsilon(1e-15));

    const Eigen::MatrixXd a = Eigen::Vector2d(1, 2).asDiagonal();
    const Eigen::MatrixXd b = Eigen::Vector2d(3, 4).asDiagonal();
    const double oracle_value = ((a + b).determinant() - a.determinant() - b.determinant()) / 2.0;
    CHECK(oracle_value == doctest::Approx(5.0));
    const std::vector<Eigen::MatrixXd> ab{a, b};
    CHECK(mixed_discriminant(ab) == doctest::Approx(oracle_value).epsilon(1e-15));
    CHECK(mixed_discriminant_2(1, 0, 2, 3, 0, 4) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("delta expansion agrees with polarization and det")
{
    oracle::Rng rng(21);
    for (int n = 1; n <= 4; ++n) {
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<Eigen::MatrixXd> ms;
            for (int k = 0; k < n; ++k) {
                ms.push_back(random_symmetric(rng, n));
            }
            const double d = mixed_discriminant(ms);
            CHECK(std::abs(d - mixed_discriminant_polarized(ms)) <= 1e-13);
            const std::vector<Eigen::MatrixXd> same(static_cast<std::size_t>(n), ms.front());
            CHECK(std::abs(mixed_discriminant(same) - ms.front().determinant()) <= 1e-13);
        }
    }
    // the n = 2 closed form
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXd a = random_symmetric(rng, 2);
        const Eigen::MatrixXd b = random_symmetric(rng, 2);
        const std::vector<Eigen::MatrixXd> ab{a, b};
        CHECK(std::abs(mixed_discriminant(ab) - mixed_discriminant_2(a(0, 0), a(0, 1), a(1, 1), b(0, 0), b(0, 1),
                                                                      b(1, 1))) <= 1e-15);
    }
}

TEST_CASE("mixed discriminant input errors")
{
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    const std::vector<Eigen::MatrixXd> wrong{Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)};
    CHECK(code_of([&] { mixed_discriminant(wrong); }) == ErrorCode::DimensionMismatch);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.5;
    const std::vector<Eigen::MatrixXd> bad{asym, Eigen::MatrixXd::Identity(2, 2)};
    CHECK(code_of([&] { mixed_discriminant(bad); }) == ErrorCode::Asymmetric);
    const std::vector<Eigen::MatrixXd> none;
    CHECK(code_of([&] { mixed_discriminant(none); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("Alexandrov mixed discriminant inequality, 1e5 pairs")
{
    oracle::Rng rng(1234);
    for (const int n : {2, 3}) {
        int violations = 0;
        double worst = 0.0;
        for (int trial = 0; trial < 100000; ++trial) {
            const Eigen::MatrixXd a = random_symmetric(rng, n);
            const Eigen::MatrixXd b = random_positive(rng, n);
            double lhs = 0.0;
            double rhs = 0.0;
            if (n == 2) {
                lhs = std::pow(mixed_discriminant_2(a(0, 0), a(0, 1), a(1, 1), b(0, 0), b(0, 1), b(1, 1)), 2);
                rhs = a.determinant() * b.determinant();
            } else {
                const std::vector<Eigen::MatrixXd> abb{a, b, b};
                const std::vector<Eigen::MatrixXd> aab{a, a, b};
                lhs = std::pow(mixed_discriminant(abb), 2);
                rhs = mixed_discriminant(aab) * b.determinant();
            }
            const double rel = (lhs - rhs) / std::max(1e-300, std::abs(lhs) + std::abs(rhs));
            worst = std::min(worst, rel);
            if (rel < -1e-12) {
                ++violations;
            }
        }
        CAPTURE(n);
        CAPTURE(worst);
        CHECK(violations == 0);
    }
}

TEST_CASE("positive semidefinite arguments give nonnegative Q")
{
    oracle::Rng rng(77);
    for (int trial = 0; trial < 2000; ++trial) {
        const Eigen::MatrixXd a = random_positive(rng, 2) - 0.05 * Eigen::MatrixXd::Identity(2, 2);
        const Eigen::MatrixXd b = random_positive(rng, 2);
        CHECK(mixed_discriminant_2(a(0, 0), a(0, 1), a(1, 1), b(0, 0), b(0, 1), b(1, 1)) >= -1e-15);
    }
}

TEST_CASE("cap volume")
{
    CHECK(cap_volume(pi / 2) == doctest::Approx(2 * pi / 3).epsilon(1e-15));
    CHECK(cap_volume(pi / 3) == doctest::Approx(5 * pi / 24).epsilon(1e-15));
    for (const double theta : {0.2, 1.0, 2.0, 3.0}) {
        CHECK(cap_volume(theta) == doctest::Approx(oracle::solid_cap_volume(theta)).epsilon(1e-13));
    }
    const CapGrid g = build_grid(pi / 3, 64, 64);
    const ScalarField l = ell_values(g);
    CHECK(mixed_volume(g, l, l, l) == doctest::Approx(5 * pi / 24).epsilon(1e-6));
    const CapGrid h = build_grid(pi / 2, 64, 64);
    const ScalarField one = ell_values(h);
    CHECK(mixed_volume(h, one, one, one) == doctest::Approx(2 * pi / 3).epsilon(1e-6));
}

TEST_CASE("multilinearity to rounding")
{
    const CapGrid g = build_grid(1.9, 32, 32);
    oracle::Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const ScalarField f = random_capillary(g, 10 + trial).values;
        const ScalarField h = random_capillary(g, 50 + trial).values;
        const ScalarField f2 = random_body(g, {.seed = 90 + static_cast<std::uint64_t>(trial)}).values();
        const ScalarField f3 = ell_values(g);
        const double a = rng.uniform(-2, 2);
        const double b = rng.uniform(-2, 2);
        for (int slot = 0; slot < 3; ++slot) {
            auto v = [&](const ScalarField& x) {
                if (slot == 0) {
                    return mixed_volume(g, x, f2, f3);
                }
                if (slot == 1) {
                    return mixed_volume(g, f2, x, f3);
                }
                return mixed_volume(g, f2, f3, x);
            };
            const double lhs = v(a * f + b * h);
            const double rhs = a * v(f) + b * v(h);
            CHECK(std::abs(lhs - rhs) <= 1e-11 * (1 + std::abs(a * v(f)) + std::abs(b * v(h))));
        }
    }
}

TEST_CASE("translation invariance")
{
    for (const double theta : {0.6, 2.5}) {
        std::vector<double> errs;
        for (const int n : {32, 64}) {
            const CapGrid g = build_grid(theta, n, n);
            const ScalarField f1 = random_body(g, {.seed = 5}).values();
            const ScalarField f2 = random_body(g, {.seed = 6}).values();
            const ScalarField f3 = ell_values(g);
            const double base = mixed_volume(g, f1, f2, f3);
            double worst = 0.0;
            for (int slot = 0; slot < 3; ++slot) {
                std::array<ScalarField, 3> args{f1, f2, f3};
                args[slot] += 0.7 * lin1(g);
                worst = std::max(worst, std::abs(mixed_volume(g, args[0], args[1], args[2]) - base) / base);
            }
            errs.push_back(worst);
        }
        CHECK(errs.back() < 1e-5);
        CHECK(errs.back() < errs.front());
    }
}

TEST_CASE("quermassintegrals of caps and bodies")
{
    for (const double theta : {pi / 4, 2.3}) {
        const CapGrid g = build_grid(theta, 64, 64);
        const double b = cap_volume(theta);
        for (const double r : {0.5, 2.0}) {
            const ScalarField h = r * ell_values(g);
            for (int j = 0; j <= 3; ++j) {
                CHECK(quermassintegral(g, h, j) == doctest::Approx(std::pow(r, 3 - j) * b).epsilon(1e-6));
            }
        }
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const CapillaryBody body = random_body(g, {.seed = seed});
            CHECK(quermassintegral(body, 3) == doctest::Approx(b).epsilon(1e-6));
            // nonnegative inputs give nonnegative mixed volumes
            for (int j = 0; j <= 3; ++j) {
                CHECK(quermassintegral(body, j) > 0.0);
            }
        }
    }
    const CapGrid g = build_grid(1.0, 16, 16);
    CHECK_THROWS_AS(quermassintegral(g, ell_values(g), 4), Error);
    CHECK_THROWS_AS(quermassintegral(g, ell_values(g), -1), Error);
}

TEST_CASE("quermass report")
{
    const CapGrid g = build_grid(pi / 3, 32, 32);
    const std::vector<CapillaryBody> cap{ell(g)};
    const std::vector<double> two{2.0};
    const QuermassReport r = quermass_report(minkowski_combine(cap, two), 2.0);
    const nlohmann::json j = to_json(r);
    CHECK(j["b_theta"].get<double>() == doctest::Approx(5 * pi / 24));
    CHECK(j["quermassintegrals"].size() == 4);
    for (int k = 0; k <= 3; ++k) {
        CHECK(j["quermassintegrals"][k]["reference"].get<double>() ==
              doctest::Approx(std::pow(2.0, 3 - k) * 5 * pi / 24));
        CHECK(j["quermassintegrals"][k]["rel_err"].get<double>() < 1e-4);
    }
    const std::string csv = to_csv(r);
    CHECK(csv.rfind("k,value,reference,rel_err\n", 0) == 0);

    const QuermassReport plain = quermass_report(random_body(g, {.seed = 2}));
    const nlohmann::json jp = to_json(plain);
    CHECK(jp["quermassintegrals"][0]["reference"].is_null());
    CHECK(jp["quermassintegrals"][3]["reference"].get<double>() == doctest::Approx(5 * pi / 24));
}

TEST_CASE("normalized elementary symmetric functions")
{
    const CapGrid g = build_grid(1.2, 64, 64);
    const ScalarField l = ell_values(g);
    for (int k = 0; k <= 2; ++k) {
        CHECK((h_k_field(g, l, k).array() - 1).abs().maxCoeff() < 1e-5);
    }
    CHECK((h_k_field(g, 2.5 * l, 1).array() - 2.5).abs().maxCoeff() < 1e-4);
    CHECK(h_k_field(g, lin1(g), 2).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_THROWS_AS(h_k_field(g, l, 3), Error);
}

TEST_CASE("Minkowski identities")
{
    for (const double theta : {0.7, 2.6}) {
        const CapGrid g = build_grid(theta, 64, 64);
        for (int k = 1; k <= 2; ++k) {
            CHECK(minkowski_identity_residual(g, ell_values(g), k) < 1e-6);
            CHECK(minkowski_identity_residual(g, 3.0 * ell_values(g), k) < 1e-6);
        }
        std::vector<double> errs;
        std::vector<double> hs;
        for (const int n : {32, 64, 128}) {
            const CapGrid gn = build_grid(theta, n, n);
            const ScalarField h = random_body(gn, {.seed = 12}).values();
            errs.push_back(std::max(minkowski_identity_residual(gn, h, 1), minkowski_identity_residual(gn, h, 2)));
            hs.push_back(gn.d_rho());
        }
        CHECK(errs.back() < 1e-5);
        CHECK(oracle::observed_order(hs, errs) >= 3.5);
    }
}

TEST_CASE("Steiner formula")
{
    const double theta = 1.4;
    const CapGrid g = build_grid(theta, 64, 64);
    const double b = cap_volume(theta);
    const std::vector<double> ts = default_steiner_samples();
    CHECK(ts.size() >= 5);

    const SteinerFit cap = steiner_check(g, ell_values(g), ts);
    constexpr std::array<double, 4> binom{1, 3, 3, 1};
    for (int k = 0; k < 4; ++k) {
        CHECK(cap.coefficients[k] == doctest::Approx(binom[k] * b).epsilon(1e-5));
    }
    const ScalarField h = random_body(g, {.seed = 31}).values();
    const SteinerFit fit = steiner_check(g, h, ts);
    CHECK(fit.coefficients[0] == doctest::Approx(quermassintegral(g, h, 0)).epsilon(1e-8));
    CHECK(fit.fit_residual < 1e-12);
    CHECK(fit.max_rel_error < 1e-4);

    const std::vector<double> few{0.1, 0.2, 0.2, 0.3};
    CHECK_THROWS_AS(steiner_check(g, h, few), Error);
}

TEST_CASE("symmetry of mixed volumes")
{
    const double theta = 2.2;
    const CapGrid g0 = build_grid(theta, 32, 32);
    const ScalarField l0 = ell_values(g0);
    CHECK(symmetry_residual(g0, l0, l0, l0) == 0.0);

    std::vector<double> errs;
    std::vector<double> hs;
    for (const int n : {32, 64, 128}) {
        const CapGrid g = build_grid(theta, n, n);
        const ScalarField h = random_body(g, {.seed = 44}).values();
        errs.push_back(symmetry_residual(g, ell_values(g), h, lin1(g) + 0.1 * ell_values(g)));
        hs.push_back(g.d_rho());
    }
    CHECK(errs.back() < 1e-5);
    CHECK(oracle::observed_order(hs, errs) >= 3.5);

    // a non-capillary argument breaks symmetry by a boundary term
    const CapGrid g = build_grid(theta, 64, 64);
    const double broken =
        symmetry_residual(g, ell_values(g), random_body(g, {.seed = 44}).values(), ScalarField::Ones(g.node_count()));
    CHECK(broken > 1e-2);
}

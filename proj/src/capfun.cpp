#include "capaf/capfun.hpp"

#include "capaf/error.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace capaf {

namespace {

constexpr double kConvexityMargin = 0.05;
constexpr int kMaxHalvings = 50;

double uniform_pm1(std::mt19937_64& rng)
{
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

double max_abs(const ScalarField& f) { return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff(); }

// Random combination of capillary_mode / l, normalized to max |u| = 1.
ScalarField random_neumann(const CapGrid& grid, std::mt19937_64& rng, int mode_cap, bool with_constant)
{
    ScalarField u = ScalarField::Zero(grid.node_count());
    const double theta = grid.theta();
    const auto rho = grid.rho_nodes();
    const auto phi = grid.phi_nodes();
    Eigen::MatrixXd cs(mode_cap + 1, grid.n_phi());
    Eigen::MatrixXd sn(mode_cap + 1, grid.n_phi());
    for (int m = 0; m <= mode_cap; ++m) {
        for (int j = 0; j < grid.n_phi(); ++j) {
            cs(m, j) = std::cos(m * phi[j]);
            sn(m, j) = std::sin(m * phi[j]);
        }
    }
    for (int k = 0; k <= mode_cap; ++k) {
        for (int m = 0; m <= mode_cap; ++m) {
            const double decay = 1.0 / ((1.0 + k) * (1.0 + m));
            const double a = uniform_pm1(rng) * decay;
            const double b = m == 0 ? 0.0 : uniform_pm1(rng) * decay;
            if (k == 0 && m == 0 && !with_constant) {
                continue;
            }
            // separable: profile per ring times trig per column
            for (int i = 0; i < grid.ring_count(); ++i) {
                const double radial = mode_profile(k, m, rho[i], theta);
                for (int j = 0; j < grid.n_phi(); ++j) {
                    u[grid.index(i, j)] += radial * (a * cs(m, j) + b * sn(m, j));
                }
            }
        }
    }
    const double peak = max_abs(u);
    if (peak > 0.0) {
        u /= peak;
    }
    return u;
}

} // namespace

ScalarField ell_values(const CapGrid& grid)
{
    const double c = std::cos(grid.theta());
    return sample(grid, [c](double rho, double) { return 1.0 - c * std::cos(rho); });
}

CapillaryBody ell(const CapGrid& grid)
{
    CapillaryBody b{{grid, {}, 0.0}, 0.0, {}};
    b.support.grid = grid;
    b.support.values = ell_values(grid);
    b.support.robin_max = robin_max(grid, b.support.values);
    b.min_eig = min_eigenvalue(a_of(grid, b.support.values)).minCoeff();
    b.provenance.params = {{"kind", "cap"}, {"radius", 1.0}};
    return b;
}

double robin_max(const CapGrid& grid, const ScalarField& f) { return robin_residual(grid, f).cwiseAbs().maxCoeff(); }

CapillaryField horizontal_linear(const CapGrid& grid, double dx, double dy, double dz, const ToleranceProfile& tol)
{
    const double norm = std::hypot(dx, dy);
    if (std::abs(dz) > 1e-14 || norm == 0.0) {
        throw Error(ErrorCode::NonHorizontalDirection, "direction must be a nonzero horizontal vector");
    }
    dx /= norm;
    dy /= norm;
    CapillaryField f{grid, {}, 0.0};
    f.grid = grid;
    f.values = sample(grid, [=](double rho, double phi) {
        return std::sin(rho) * (dx * std::cos(phi) + dy * std::sin(phi));
    });
    f.robin_max = robin_max(grid, f.values);
    (void)tol;
    return f;
}

CapillaryField from_neumann(const CapGrid& grid, const ScalarField& u, const ToleranceProfile& tol)
{
    check_shape(grid, u);
    const ScalarField du = radial_derivative(grid, u);
    const Eigen::VectorXd est = boundary_derivative_error(grid, u);
    const double scale = max_abs(u);
    for (int j = 0; j < grid.n_phi(); ++j) {
        const double d = std::abs(du[grid.boundary_index()[static_cast<std::size_t>(j)]]);
        const double limit = tol.robin_limit(grid.d_rho(), grid.radial_order(), scale, est[j]);
        if (d > limit) {
            std::ostringstream msg;
            msg << "boundary normal derivative " << d << " exceeds " << limit;
            throw Error(ErrorCode::NeumannViolation, msg.str());
        }
    }
    CapillaryField f{grid, {}, 0.0};
    f.grid = grid;
    f.values = ell_values(grid).cwiseProduct(u);
    f.robin_max = robin_max(grid, f.values);
    return f;
}

double mode_profile(int k, int m, double rho, double theta)
{
    if (m == 0) {
        return std::cos(k * std::numbers::pi * rho / theta);
    }
    const double s = rho / theta;
    const double radial = std::pow(s, m) - (static_cast<double>(m) / (m + 2)) * std::pow(s, m + 2);
    return std::cos(k * std::numbers::pi * s * s) * radial;
}

ScalarField capillary_mode(const CapGrid& grid, int k, int m, bool sine)
{
    const double theta = grid.theta();
    const double c = std::cos(theta);
    return sample(grid, [=](double rho, double phi) {
        const double trig = sine ? std::sin(m * phi) : std::cos(m * phi);
        return (1.0 - c * std::cos(rho)) * mode_profile(k, m, rho, theta) * trig;
    });
}

Certification certify(const CapGrid& grid, const ScalarField& h, const ToleranceProfile& tol)
{
    check_shape(grid, h);
    Certification c;
    const Eigen::VectorXd robin = robin_residual(grid, h);
    const Eigen::VectorXd eig = min_eigenvalue(a_of(grid, h));
    c.robin_max = robin.cwiseAbs().maxCoeff();
    const Eigen::VectorXd est = boundary_derivative_error(grid, h);
    c.robin_tolerance = tol.robin_limit(grid.d_rho(), grid.radial_order(), max_abs(h), est.maxCoeff());
    c.min_eig = eig.minCoeff();
    c.eig_tolerance = tol.convexity_floor;
    for (Index j = 0; j < robin.size(); ++j) {
        if (std::abs(robin[j]) > tol.robin_limit(grid.d_rho(), grid.radial_order(), max_abs(h), est[j])) {
            c.robin_offenders.push_back(grid.boundary_index()[static_cast<std::size_t>(j)]);
        }
    }
    for (Index k = 0; k < eig.size(); ++k) {
        if (!(eig[k] > c.eig_tolerance)) {
            c.convexity_offenders.push_back(k);
        }
    }
    c.accepted = c.robin_offenders.empty() && c.convexity_offenders.empty() && h.allFinite();
    if (c.accepted) {
        CapillaryBody b{{grid, {}, 0.0}, 0.0, {}};
        b.support.grid = grid;
        b.support.values = h;
        b.support.robin_max = c.robin_max;
        b.min_eig = c.min_eig;
        c.body = std::move(b);
    }
    return c;
}

CapillaryBody random_body(const CapGrid& grid, const RandomBodyParams& params, const ToleranceProfile& tol)
{
    const ScalarField l = ell_values(grid);
    Provenance prov;
    prov.seed = params.seed;
    prov.params = {{"kind", "random"},
                   {"base_radius", params.base_radius},
                   {"amplitude", params.amplitude},
                   {"mode_cap", params.mode_cap}};
    if (params.amplitude == 0.0) {
        Certification c = certify(grid, params.base_radius * l, tol);
        if (!c.accepted) {
            throw Error(ErrorCode::GenerationFailed, "scaled cap failed certification");
        }
        c.body->provenance = prov;
        c.body->provenance.params["final_amplitude"] = 0.0;
        return *c.body;
    }
    std::mt19937_64 rng(params.seed);
    const ScalarField lu = l.cwiseProduct(random_neumann(grid, rng, params.mode_cap, false));
    double amp = params.amplitude;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
        const ScalarField h = params.base_radius * l + amp * lu;
        Certification c = certify(grid, h, tol);
        if (c.accepted && c.min_eig >= kConvexityMargin * params.base_radius) {
            c.body->provenance = prov;
            c.body->provenance.params["final_amplitude"] = amp;
            return *c.body;
        }
        amp *= 0.5;
    }
    throw Error(ErrorCode::GenerationFailed,
                "no convex body after " + std::to_string(kMaxHalvings) + " amplitude halvings");
}

CapillaryField random_capillary(const CapGrid& grid, std::uint64_t seed, int mode_cap, double scale,
                                const ToleranceProfile& tol)
{
    std::mt19937_64 rng(seed);
    CapillaryField f{grid, {}, 0.0};
    f.grid = grid;
    f.values = scale * ell_values(grid).cwiseProduct(random_neumann(grid, rng, mode_cap, true));
    f.robin_max = robin_max(grid, f.values);
    (void)tol;
    return f;
}

CapillaryBody minkowski_combine(std::span<const CapillaryBody> bodies, std::span<const double> lambdas,
                                const ToleranceProfile& tol)
{
    if (bodies.empty() || bodies.size() != lambdas.size()) {
        throw Error(ErrorCode::DimensionMismatch, "need one lambda per body");
    }
    const CapGrid& grid = bodies.front().grid();
    double total = 0.0;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        if (!bodies[i].grid().same_layout(grid)) {
            throw Error(ErrorCode::GridMismatch, "bodies live on different grids");
        }
        if (lambdas[i] < 0.0) {
            throw Error(ErrorCode::NegativeLambda, "Minkowski coefficients must be nonnegative");
        }
        total += lambdas[i];
    }
    if (!(total > 0.0)) {
        throw Error(ErrorCode::AllZeroLambdas, "at least one coefficient must be positive");
    }
    ScalarField h = ScalarField::Zero(grid.node_count());
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        h += lambdas[i] * bodies[i].values();
    }
    Certification c = certify(grid, h, tol);
    if (!c.accepted) {
        throw Error(ErrorCode::NotConvex, "Minkowski combination failed certification");
    }
    c.body->provenance.params = {{"kind", "minkowski"}, {"count", bodies.size()}};
    return *c.body;
}

CapillaryBody translate(const CapillaryBody& body, double c1, double c2)
{
    const CapGrid& grid = body.grid();
    CapillaryBody out = body;
    out.support.values += sample(grid, [=](double rho, double phi) {
        return std::sin(rho) * (c1 * std::cos(phi) + c2 * std::sin(phi));
    });
    out.support.robin_max = robin_max(grid, out.support.values);
    out.min_eig = min_eigenvalue(a_of(grid, out.support.values)).minCoeff();
    return out;
}

nlohmann::json body_to_json(const CapillaryBody& body)
{
    const CapGrid& g = body.grid();
    nlohmann::json prov = {{"params", body.provenance.params}};
    prov["seed"] = body.provenance.seed ? nlohmann::json(*body.provenance.seed) : nlohmann::json(nullptr);
    std::vector<double> values(body.values().data(), body.values().data() + body.values().size());
    return {
        {"theta", g.theta()},
        {"n_rho", g.n_rho()},
        {"n_phi", g.n_phi()},
        {"radial_order", g.radial_order()},
        {"values", values},
        {"provenance", prov},
    };
}

CapillaryBody body_from_json(const nlohmann::json& j, const ToleranceProfile& tol)
{
    try {
        const CapGrid grid = build_grid(j.at("theta").get<double>(), j.at("n_rho").get<int>(),
                                        j.at("n_phi").get<int>(), j.value("radial_order", kDefaultRadialOrder));
        const auto values = j.at("values").get<std::vector<double>>();
        if (static_cast<Index>(values.size()) != grid.node_count()) {
            throw Error(ErrorCode::ShapeMismatch, "values length does not match the grid");
        }
        const ScalarField h = Eigen::Map<const ScalarField>(values.data(), static_cast<Index>(values.size()));
        Certification c = certify(grid, h, tol);
        if (!c.accepted) {
            throw Error(ErrorCode::NotConvex, "stored support function failed certification");
        }
        if (j.contains("provenance")) {
            const auto& p = j.at("provenance");
            if (p.contains("seed") && !p.at("seed").is_null()) {
                c.body->provenance.seed = p.at("seed").get<std::uint64_t>();
            }
            if (p.contains("params")) {
                c.body->provenance.params = p.at("params");
            }
        }
        return *c.body;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
}

void save_body(const CapillaryBody& body, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    }
    out << body_to_json(body).dump(1) << '\n';
    if (!out) {
        throw Error(ErrorCode::Io, "write failed for " + path);
    }
}

CapillaryBody load_body(const std::string& path, const ToleranceProfile& tol)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, path + ": " + e.what());
    }
    return body_from_json(j, tol);
}

} // namespace capaf

#include "capaf/reconstruct.hpp"

#include "capaf/error.hpp"
#include "capaf/mixedvol.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace capaf {

namespace {

std::vector<Triangle> triangulate(const CapGrid& g)
{
    const int np = g.n_phi();
    auto id = [&](int i, int j) { return static_cast<int>(g.index(i, j % np)); };
    std::vector<Triangle> tris;
    // fan over the innermost ring closes the disk at the pole
    for (int j = 1; j + 1 < np; ++j) {
        tris.push_back({id(0, 0), id(0, j), id(0, j + 1)});
    }
    for (int i = 0; i + 1 < g.ring_count(); ++i) {
        for (int j = 0; j < np; ++j) {
            const int a = id(i, j);
            const int b = id(i + 1, j);
            const int c = id(i + 1, j + 1);
            const int d = id(i, j + 1);
            tris.push_back({a, b, c});
            tris.push_back({a, c, d});
        }
    }
    return tris;
}

Eigen::Vector3d row(const Points& p, Index k) { return p.row(k).transpose(); }

double max_abs_diff(const Points& a, const Points& b)
{
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace

EmbeddedPatch embed(const CapGrid& g, const ScalarField& h)
{
    check_shape(g, h);
    const VectorField grad = surface_gradient(g, h);
    EmbeddedPatch p{g, Points(g.node_count(), 3), Points(g.node_count(), 3), triangulate(g), {}};
    const auto rho = g.rho_nodes();
    const auto phi = g.phi_nodes();
    for (int i = 0; i < g.ring_count(); ++i) {
        const double sr = std::sin(rho[i]);
        const double cr = std::cos(rho[i]);
        for (int j = 0; j < g.n_phi(); ++j) {
            const Index k = g.index(i, j);
            const double cp = std::cos(phi[j]);
            const double sp = std::sin(phi[j]);
            const Eigen::Vector3d nu(sr * cp, sr * sp, cr);
            const Eigen::Vector3d er(cr * cp, cr * sp, -sr);
            const Eigen::Vector3d ep(-sp, cp, 0.0);
            p.normals.row(k) = nu.transpose();
            p.positions.row(k) = (grad.rho[k] * er + grad.phi[k] * ep + h[k] * nu).transpose();
        }
    }
    const auto b = g.boundary_index();
    p.boundary.assign(b.begin(), b.end());
    return p;
}

EmbeddedPatch embed(const CapillaryBody& body) { return embed(body.grid(), body.values()); }

double contact_angle_residual(const EmbeddedPatch& p)
{
    const double c = std::cos(p.grid.theta());
    double worst = 0.0;
    for (const Index k : p.boundary) {
        // e = -E3
        worst = std::max(worst, std::abs(-p.normals(k, 2) + c));
    }
    return worst;
}

double planarity_residual(const EmbeddedPatch& p)
{
    double worst = 0.0;
    for (const Index k : p.boundary) {
        worst = std::max(worst, std::abs(p.positions(k, 2)));
    }
    return worst;
}

double interior_min_height(const EmbeddedPatch& p)
{
    const Index interior = static_cast<Index>(p.grid.n_rho()) * p.grid.n_phi();
    return p.positions.col(2).head(interior).minCoeff();
}

std::vector<int> degenerate_triangles(const EmbeddedPatch& p)
{
    std::vector<double> area;
    area.reserve(p.triangles.size());
    for (const Triangle& t : p.triangles) {
        const Eigen::Vector3d a = row(p.positions, t[0]);
        area.push_back(0.5 * (row(p.positions, t[1]) - a).cross(row(p.positions, t[2]) - a).norm());
    }
    const double mean = neumaier_sum(area) / static_cast<double>(std::max<std::size_t>(1, area.size()));
    std::vector<int> bad;
    for (std::size_t i = 0; i < area.size(); ++i) {
        if (area[i] < 1e-14 * mean) {
            bad.push_back(static_cast<int>(i));
        }
    }
    return bad;
}

double enclosed_volume(const EmbeddedPatch& p)
{
    std::vector<double> terms;
    terms.reserve(p.triangles.size());
    for (const Triangle& t : p.triangles) {
        const Eigen::Vector3d a = row(p.positions, t[0]);
        const Eigen::Vector3d b = row(p.positions, t[1]);
        const Eigen::Vector3d c = row(p.positions, t[2]);
        // <centroid, area vector> / 3 = det(a, b, c) / 6
        terms.push_back(a.dot(b.cross(c)) / 6.0);
    }
    return neumaier_sum(terms);
}

double vertex_normal_deviation(const EmbeddedPatch& p)
{
    Points acc = Points::Zero(p.positions.rows(), 3);
    for (const Triangle& t : p.triangles) {
        const Eigen::Vector3d a = row(p.positions, t[0]);
        const Eigen::Vector3d n = (row(p.positions, t[1]) - a).cross(row(p.positions, t[2]) - a);
        for (const int v : t) {
            acc.row(v) += n.transpose();
        }
    }
    double worst = 0.0;
    for (Index k = 0; k < acc.rows(); ++k) {
        const Eigen::Vector3d m = row(acc, k).normalized();
        const double c = std::clamp(m.dot(row(p.normals, k)), -1.0, 1.0);
        worst = std::max(worst, std::acos(c));
    }
    return worst;
}

std::array<ScalarField, 2> principal_radii(const CapillaryBody& body)
{
    const SymTensorField a = a_of(body.grid(), body.values());
    const ScalarField mean = 0.5 * (a.rr + a.pp);
    const ScalarField disc =
        (0.25 * (a.rr - a.pp).cwiseAbs2() + a.rp.cwiseAbs2()).cwiseSqrt();
    return {mean - disc, mean + disc};
}

BoundaryCurve boundary_curve(const EmbeddedPatch& p)
{
    const CapGrid& g = p.grid;
    const int np = g.n_phi();
    Eigen::VectorXd x(np);
    Eigen::VectorXd y(np);
    for (int j = 0; j < np; ++j) {
        x[j] = p.positions(p.boundary[j], 0);
        y[j] = p.positions(p.boundary[j], 1);
    }
    const Eigen::VectorXd x1 = g.fourier_d1() * x;
    const Eigen::VectorXd y1 = g.fourier_d1() * y;
    const Eigen::VectorXd x2 = g.fourier_d2() * x;
    const Eigen::VectorXd y2 = g.fourier_d2() * y;
    std::vector<double> len(np);
    std::vector<double> turn(np);
    for (int j = 0; j < np; ++j) {
        const double speed2 = x1[j] * x1[j] + y1[j] * y1[j];
        len[j] = std::sqrt(speed2) * g.d_phi();
        turn[j] = (x1[j] * y2[j] - y1[j] * x2[j]) / speed2 * g.d_phi();
    }
    return {neumaier_sum(len), neumaier_sum(turn)};
}

double boundary_form_quermass(const CapillaryBody& body, int k)
{
    if (k < 1 || k > 2) {
        throw Error(ErrorCode::IndexOutOfRange, "boundary form needs k in 1..2");
    }
    const CapGrid& g = body.grid();
    const double theta = g.theta();
    const BoundaryCurve curve = boundary_curve(embed(body));
    double surface = 0.0;
    double boundary = 0.0;
    if (k == 1) {
        // H_1 dA = (tr A / 2) d sigma
        surface = integrate(g, h_k_field(g, body.values(), 1));
        boundary = curve.length;
    } else {
        surface = integrate(g, ScalarField::Ones(g.node_count()));
        boundary = curve.total_curvature;
    }
    const double coeff = std::cos(theta) * std::pow(std::sin(theta), k) / 2.0;
    return (surface - coeff * boundary) / 3.0;
}

ParallelBody parallel_body(const CapillaryBody& body, double t)
{
    if (!(t > 0.0)) {
        throw Error(ErrorCode::IndexOutOfRange, "parallel distance must be positive");
    }
    const CapGrid& g = body.grid();
    const CapillaryBody cap = ell(g);
    const std::array<CapillaryBody, 2> parts{body, cap};
    const std::array<double, 2> weights{1.0, t};
    ParallelBody out{minkowski_combine(parts, weights), 0.0, 0.0};

    const EmbeddedPatch base = embed(body);
    const EmbeddedPatch moved = embed(out.body);
    const EmbeddedPatch unit = embed(cap);
    // xi = nu + cos(theta) e = nu - cos(theta) E3
    Points xi = base.normals;
    xi.col(2).array() -= std::cos(g.theta());
    out.displacement_error = max_abs_diff(moved.positions - base.positions, t * xi);
    out.linearity_error = max_abs_diff(moved.positions - base.positions, t * unit.positions);
    return out;
}

std::string mesh_to_obj(const EmbeddedPatch& p)
{
    std::string out;
    char buf[128];
    for (Index k = 0; k < p.positions.rows(); ++k) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.positions(k, 0), p.positions(k, 1),
                      p.positions(k, 2));
        out += buf;
    }
    for (Index k = 0; k < p.normals.rows(); ++k) {
        std::snprintf(buf, sizeof buf, "vn %.17g %.17g %.17g\n", p.normals(k, 0), p.normals(k, 1), p.normals(k, 2));
        out += buf;
    }
    for (const Triangle& t : p.triangles) {
        std::snprintf(buf, sizeof buf, "f %d//%d %d//%d %d//%d\n", t[0] + 1, t[0] + 1, t[1] + 1, t[1] + 1, t[2] + 1,
                      t[2] + 1);
        out += buf;
    }
    return out;
}

void export_mesh(const EmbeddedPatch& p, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    }
    out << mesh_to_obj(p);
    if (!out) {
        throw Error(ErrorCode::Io, "failed writing '" + path + "'");
    }
}

MeshData import_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    }
    std::vector<Eigen::Vector3d> v;
    std::vector<Eigen::Vector3d> vn;
    MeshData m;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v" || tag == "vn") {
            std::string sx, sy, sz;
            ls >> sx >> sy >> sz;
            if (!ls) {
                throw Error(ErrorCode::Parse, "bad vertex line: " + line);
            }
            const Eigen::Vector3d p(std::strtod(sx.c_str(), nullptr), std::strtod(sy.c_str(), nullptr),
                                    std::strtod(sz.c_str(), nullptr));
            (tag == "v" ? v : vn).push_back(p);
        } else if (tag == "f") {
            Triangle t{};
            for (int& c : t) {
                std::string tok;
                ls >> tok;
                if (!ls) {
                    throw Error(ErrorCode::Parse, "bad face line: " + line);
                }
                c = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            m.triangles.push_back(t);
        }
    }
    m.positions.resize(static_cast<Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) {
        m.positions.row(static_cast<Index>(i)) = v[i].transpose();
    }
    m.normals.resize(static_cast<Index>(vn.size()), 3);
    for (std::size_t i = 0; i < vn.size(); ++i) {
        m.normals.row(static_cast<Index>(i)) = vn[i].transpose();
    }
    return m;
}

nlohmann::json patch_summary(const CapillaryBody& body, const EmbeddedPatch& patch)
{
    const CapGrid& g = body.grid();
    const double mesh_volume = enclosed_volume(patch);
    const double v0 = quermassintegral(body, 0);
    const auto radii = principal_radii(body);
    const BoundaryCurve curve = boundary_curve(patch);
    nlohmann::json j;
    j["theta"] = g.theta();
    j["grid"] = {{"n_rho", g.n_rho()}, {"n_phi", g.n_phi()}};
    j["vertices"] = patch.positions.rows();
    j["triangles"] = patch.triangles.size();
    j["degenerate_triangles"] = degenerate_triangles(patch).size();
    j["contact_angle_residual"] = contact_angle_residual(patch);
    j["planarity_residual"] = planarity_residual(patch);
    j["interior_min_height"] = interior_min_height(patch);
    j["vertex_normal_deviation"] = vertex_normal_deviation(patch);
    j["enclosed_volume"] = mesh_volume;
    j["quermass_v0"] = v0;
    j["volume_rel_diff"] = std::abs(mesh_volume - v0) / std::abs(v0);
    j["boundary_length"] = curve.length;
    j["boundary_total_curvature"] = curve.total_curvature;
    for (int k = 1; k <= 2; ++k) {
        const double bf = boundary_form_quermass(body, k);
        const double mv = quermassintegral(body, k + 1);
        j["boundary_form"].push_back(
            {{"k", k + 1}, {"boundary_form", bf}, {"mixed_volume", mv}, {"rel_diff", std::abs(bf - mv) / std::abs(mv)}});
    }
    j["principal_radius_min"] = radii[0].minCoeff();
    j["principal_radius_max"] = radii[1].maxCoeff();
    return j;
}

} // namespace capaf

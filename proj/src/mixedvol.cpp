#include "capaf/mixedvol.hpp"

#include "capaf/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace capaf {

namespace {

void validate(std::span<const Eigen::MatrixXd> ms)
{
    const Index n = static_cast<Index>(ms.size());
    if (n == 0) {
        throw Error(ErrorCode::DimensionMismatch, "need at least one matrix");
    }
    for (const auto& m : ms) {
        if (m.rows() != n || m.cols() != n) {
            throw Error(ErrorCode::DimensionMismatch, "mixed discriminant of n matrices needs n x n matrices");
        }
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw Error(ErrorCode::Asymmetric, "matrix is not symmetric");
        }
    }
}

int permutation_sign(const std::vector<int>& p)
{
    int sign = 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            if (p[i] > p[j]) {
                sign = -sign;
            }
        }
    }
    return sign;
}

double factorial(int n)
{
    double f = 1.0;
    for (int k = 2; k <= n; ++k) {
        f *= k;
    }
    return f;
}

} // namespace

double mixed_discriminant(std::span<const Eigen::MatrixXd> ms)
{
    validate(ms);
    const int n = static_cast<int>(ms.size());
    if (n > 4) {
        throw Error(ErrorCode::DimensionMismatch, "delta expansion is limited to n <= 4");
    }
    std::vector<std::vector<int>> perms;
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
        perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));

    double sum = 0.0;
    for (const auto& rows : perms) {
        const int sr = permutation_sign(rows);
        for (const auto& cols : perms) {
            double term = sr * permutation_sign(cols);
            for (int k = 0; k < n && term != 0.0; ++k) {
                term *= ms[k](rows[k], cols[k]);
            }
            sum += term;
        }
    }
    return sum / factorial(n);
}

double mixed_discriminant_polarized(std::span<const Eigen::MatrixXd> ms)
{
    validate(ms);
    const int n = static_cast<int>(ms.size());
    double sum = 0.0;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
        int count = 0;
        for (int k = 0; k < n; ++k) {
            if (mask & (1u << k)) {
                s += ms[k];
                ++count;
            }
        }
        sum += ((n - count) % 2 == 0 ? 1.0 : -1.0) * s.determinant();
    }
    return sum / factorial(n);
}

Eigen::VectorXd mixed_discriminant(const SymTensorField& a, const SymTensorField& b)
{
    if (a.size() != b.size()) {
        throw Error(ErrorCode::ShapeMismatch, "tensor fields differ in length");
    }
    Eigen::VectorXd q(a.size());
    for (Index k = 0; k < a.size(); ++k) {
        q[k] = mixed_discriminant_2(a.rr[k], a.rp[k], a.pp[k], b.rr[k], b.rp[k], b.pp[k]);
    }
    return q;
}

double mixed_volume(const CapGrid& grid, const ScalarField& f1, const ScalarField& f2, const ScalarField& f3)
{
    check_shape(grid, f1);
    check_shape(grid, f2);
    check_shape(grid, f3);
    const Eigen::VectorXd q = mixed_discriminant(a_of(grid, f2), a_of(grid, f3));
    return integrate(grid, f1.cwiseProduct(q)) / 3.0;
}

double cap_volume(double theta)
{
    const double c = std::cos(theta);
    return std::numbers::pi * (1.0 - c) * (1.0 - c) * (2.0 + c) / 3.0;
}

double quermassintegral(const CapGrid& grid, const ScalarField& h, int j)
{
    if (j < 0 || j > 3) {
        throw Error(ErrorCode::IndexOutOfRange, "quermassintegral index must be in 0..3");
    }
    const ScalarField l = ell_values(grid);
    std::array<const ScalarField*, 3> args{};
    for (int s = 0; s < 3; ++s) {
        args[s] = s < 3 - j ? &h : &l;
    }
    return mixed_volume(grid, *args[0], *args[1], *args[2]);
}

double quermassintegral(const CapillaryBody& body, int j) { return quermassintegral(body.grid(), body.values(), j); }

QuermassReport quermass_report(const CapillaryBody& body, double reference_radius)
{
    const CapGrid& g = body.grid();
    QuermassReport r;
    r.theta = g.theta();
    r.n_rho = g.n_rho();
    r.n_phi = g.n_phi();
    r.b_theta = cap_volume(g.theta());
    for (int j = 0; j <= 3; ++j) {
        r.values.push_back(quermassintegral(body, j));
        double ref = std::numeric_limits<double>::quiet_NaN();
        if (reference_radius > 0.0) {
            ref = std::pow(reference_radius, 3 - j) * r.b_theta;
        } else if (j == 3) {
            ref = r.b_theta;
        }
        r.references.push_back(ref);
    }
    return r;
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

} // namespace

nlohmann::json to_json(const QuermassReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < r.values.size(); ++j) {
        const double ref = r.references[j];
        const double err = std::isfinite(ref) ? std::abs(r.values[j] - ref) / std::abs(ref) : NAN;
        rows.push_back({{"k", j}, {"value", r.values[j]}, {"reference", number_or_null(ref)},
                        {"rel_err", number_or_null(err)}});
    }
    return {{"theta", r.theta},
            {"grid", {{"n_rho", r.n_rho}, {"n_phi", r.n_phi}}},
            {"b_theta", r.b_theta},
            {"b_theta_formula", r.b_theta_formula},
            {"quermassintegrals", rows}};
}

std::string to_csv(const QuermassReport& r)
{
    std::ostringstream out;
    out.precision(17);
    out << "k,value,reference,rel_err\n";
    for (std::size_t j = 0; j < r.values.size(); ++j) {
        const double ref = r.references[j];
        out << j << ',' << r.values[j] << ',';
        if (std::isfinite(ref)) {
            out << ref << ',' << std::abs(r.values[j] - ref) / std::abs(ref);
        } else {
            out << ',';
        }
        out << '\n';
    }
    return out.str();
}

ScalarField h_k_field(const CapGrid& grid, const ScalarField& h, int k)
{
    if (k < 0 || k > 2) {
        throw Error(ErrorCode::IndexOutOfRange, "H_k needs 0 <= k <= 2");
    }
    if (k == 0) {
        return ScalarField::Ones(grid.node_count());
    }
    const SymTensorField a = a_of(grid, h);
    if (k == 1) {
        return 0.5 * (a.rr + a.pp);
    }
    return a.rr.cwiseProduct(a.pp) - a.rp.cwiseAbs2();
}

double minkowski_identity_residual(const CapGrid& grid, const ScalarField& f, int k)
{
    if (k < 1 || k > 2) {
        throw Error(ErrorCode::IndexOutOfRange, "Minkowski identity index must be in 1..2");
    }
    const double lhs = integrate(grid, f.cwiseProduct(h_k_field(grid, f, k - 1)));
    const double rhs = integrate(grid, ell_values(grid).cwiseProduct(h_k_field(grid, f, k)));
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale == 0.0 ? 0.0 : std::abs(lhs - rhs) / scale;
}

std::vector<double> default_steiner_samples()
{
    std::vector<double> t;
    for (int i = 0; i < 6; ++i) {
        t.push_back(0.1 + 1.9 * i / 5.0);
    }
    return t;
}

SteinerFit steiner_check(const CapGrid& grid, const ScalarField& h, std::span<const double> t_values)
{
    check_shape(grid, h);
    std::vector<double> distinct(t_values.begin(), t_values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4) {
        throw Error(ErrorCode::InsufficientSamples, "Steiner fit needs at least 4 distinct t values");
    }
    const ScalarField l = ell_values(grid);
    SteinerFit fit;
    fit.t_values.assign(t_values.begin(), t_values.end());
    const Index m = static_cast<Index>(t_values.size());
    Eigen::MatrixXd vander(m, 4);
    Eigen::VectorXd rhs(m);
    for (Index i = 0; i < m; ++i) {
        const double t = t_values[static_cast<std::size_t>(i)];
        const ScalarField ht = h + t * l;
        const double vol = mixed_volume(grid, ht, ht, ht);
        fit.volumes.push_back(vol);
        rhs[i] = vol;
        for (int k = 0; k < 4; ++k) {
            vander(i, k) = std::pow(t, k);
        }
    }
    const Eigen::VectorXd coef = vander.colPivHouseholderQr().solve(rhs);
    fit.fit_residual = (vander * coef - rhs).norm() / rhs.norm();
    constexpr std::array<double, 4> binom{1.0, 3.0, 3.0, 1.0};
    for (int k = 0; k < 4; ++k) {
        fit.coefficients.push_back(coef[k]);
        const double pred = binom[k] * quermassintegral(grid, h, k);
        fit.predicted.push_back(pred);
        const double err = std::abs(coef[k] - pred) / std::abs(pred);
        fit.rel_errors.push_back(err);
        fit.max_rel_error = std::max(fit.max_rel_error, err);
    }
    return fit;
}

double symmetry_residual(const CapGrid& grid, const ScalarField& f1, const ScalarField& f2, const ScalarField& f3)
{
    const std::array<const ScalarField*, 3> f{&f1, &f2, &f3};
    std::array<int, 3> p{0, 1, 2};
    const double base = mixed_volume(grid, f1, f2, f3);
    double worst = 0.0;
    while (std::next_permutation(p.begin(), p.end())) {
        const double v = mixed_volume(grid, *f[p[0]], *f[p[1]], *f[p[2]]);
        worst = std::max(worst, std::abs(v - base));
    }
    return base == 0.0 ? worst : worst / std::abs(base);
}

} // namespace capaf

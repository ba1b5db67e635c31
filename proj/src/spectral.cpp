#include "capaf/spectral.hpp"

#include "capaf/error.hpp"
#include "capaf/mixedvol.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace capaf {

namespace {

constexpr double kIllConditioned = 1e12;

ScalarField linear_e1(const CapGrid& g)
{
    return sample(g, [](double rho, double phi) { return std::sin(rho) * std::cos(phi); });
}

ScalarField linear_e2(const CapGrid& g)
{
    return sample(g, [](double rho, double phi) { return std::sin(rho) * std::sin(phi); });
}

// Mean horizontal position of the boundary curve of the body with support h.
Eigen::Vector2d boundary_centroid(const CapGrid& g, const ScalarField& h)
{
    const ScalarField hr = radial_derivative(g, h);
    const ScalarField hp = azimuthal_derivative(g, h);
    const double st = std::sin(g.theta());
    const double ct = std::cos(g.theta());
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    const auto phi = g.phi_nodes();
    for (int j = 0; j < g.n_phi(); ++j) {
        const Index k = g.index(g.boundary_ring(), j);
        const double cp = std::cos(phi[j]);
        const double sp = std::sin(phi[j]);
        const double radial = hr[k] * ct + h[k] * st;
        const double tangential = hp[k] / st;
        c[0] += radial * cp - tangential * sp;
        c[1] += radial * sp + tangential * cp;
    }
    return c / g.n_phi();
}

double sum_products(const ScalarField& w, const ScalarField& a, const ScalarField& b)
{
    const ScalarField p = w.cwiseProduct(a).cwiseProduct(b);
    return neumaier_sum(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

} // namespace

WeightedSpace make_space(const CapillaryBody& body)
{
    const CapGrid& g = body.grid();
    WeightedSpace s{g, body.values(), body.values(), 0.0, 0.0, {}, {}, {}};
    if (s.f2.minCoeff() <= 0.0) {
        const Eigen::Vector2d c = boundary_centroid(g, s.f2);
        s.shift_e1 = c[0];
        s.shift_e2 = c[1];
        s.f2 = s.f2_original - c[0] * linear_e1(g) - c[1] * linear_e2(g);
        if (s.f2.minCoeff() <= 0.0) {
            throw Error(ErrorCode::DegenerateWeight, "reference support is not positive after translation");
        }
    }
    s.a2 = a_of(g, s.f2);
    if (min_eigenvalue(s.a2).minCoeff() <= 0.0) {
        throw Error(ErrorCode::DegenerateWeight, "A[f2] is not positive definite");
    }
    s.det2 = s.a2.rr.cwiseProduct(s.a2.pp) - s.a2.rp.cwiseAbs2();
    s.weights = g.quad_weights().cwiseProduct(s.det2).cwiseQuotient(3.0 * s.f2);
    return s;
}

ScalarField apply_operator(const WeightedSpace& s, const ScalarField& f)
{
    check_shape(s.grid, f);
    const ScalarField q = mixed_discriminant(a_of(s.grid, f), s.a2);
    return s.f2.cwiseProduct(q).cwiseQuotient(s.det2);
}

namespace {

// Rows of f -> Q(A[f], A[f2]) as a sparse matrix over all nodes.
SparseMatrix assemble_q(const WeightedSpace& s)
{
    const CapGrid& g = s.grid;
    const int np = g.n_phi();
    const int half = np / 2;
    const Index n = g.node_count();
    const Eigen::MatrixXd& fd1 = g.fourier_d1();
    const Eigen::MatrixXd& fd2 = g.fourier_d2();

    SparseMatrix m(n, n);
    std::size_t estimate = 0;
    for (int i = 0; i < g.ring_count(); ++i) {
        estimate += static_cast<std::size_t>(np) * (g.d1(i).size() * np + g.d2(i).size() + 2 * np + 1);
    }
    m.reserve(Eigen::VectorXi::Constant(n, static_cast<int>(estimate / n + 1)));

    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    std::vector<Index> touched;
    auto add = [&](Index col, double v) {
        if (!used[col]) {
            used[col] = 1;
            touched.push_back(col);
        }
        row[col] += v;
    };

    for (int i = 0; i < g.ring_count(); ++i) {
        const double sn = g.sin_rho()[i];
        const double cot = g.cos_rho()[i] / sn;
        for (int j = 0; j < np; ++j) {
            const Index node = g.index(i, j);
            const double crr = 0.5 * s.a2.pp[node];
            const double cpp = 0.5 * s.a2.rr[node];
            const double crp = -s.a2.rp[node];
            touched.clear();

            add(node, crr + cpp);
            for (const RadialTap& t : g.d2(i)) {
                add(g.index(t.ring, t.flip ? (j + half) % np : j), crr * t.weight);
            }
            for (const RadialTap& t : g.d1(i)) {
                add(g.index(t.ring, t.flip ? (j + half) % np : j), cpp * cot * t.weight);
            }
            for (int jj = 0; jj < np; ++jj) {
                const double v = cpp / (sn * sn) * fd2(j, jj) - crp * cot / sn * fd1(j, jj);
                if (v != 0.0) {
                    add(g.index(i, jj), v);
                }
            }
            for (const RadialTap& t : g.d1(i)) {
                const int jt = t.flip ? (j + half) % np : j;
                for (int jj = 0; jj < np; ++jj) {
                    const double v = crp / sn * t.weight * fd1(jt, jj);
                    if (v != 0.0) {
                        add(g.index(t.ring, jj), v);
                    }
                }
            }

            std::sort(touched.begin(), touched.end());
            for (const Index c : touched) {
                m.insert(node, c) = row[c];
                row[c] = 0.0;
                used[c] = 0;
            }
        }
    }
    m.makeCompressed();
    return m;
}

} // namespace

SparseMatrix assemble_operator(const WeightedSpace& s)
{
    const ScalarField scale = s.f2.cwiseQuotient(s.det2);
    SparseMatrix q = assemble_q(s);
    return scale.asDiagonal() * q;
}

double inner(const WeightedSpace& s, const ScalarField& f, const ScalarField& g)
{
    check_shape(s.grid, f);
    check_shape(s.grid, g);
    return sum_products(s.weights, f, g);
}

double norm(const WeightedSpace& s, const ScalarField& f) { return std::sqrt(std::max(0.0, inner(s, f, f))); }

namespace {

double pair_scale(const WeightedSpace& s, const ScalarField& f, const ScalarField& g, const ScalarField& af,
                  const ScalarField& ag)
{
    return norm(s, f) * norm(s, ag) + norm(s, g) * norm(s, af);
}

} // namespace

double self_adjoint_residual(const WeightedSpace& s, const ScalarField& f, const ScalarField& g)
{
    const ScalarField af = apply_operator(s, f);
    const ScalarField ag = apply_operator(s, g);
    const double scale = pair_scale(s, f, g, af, ag);
    const double diff = std::abs(inner(s, f, ag) - inner(s, g, af));
    return scale == 0.0 ? diff : diff / scale;
}

double form_residual(const WeightedSpace& s, const ScalarField& f, const ScalarField& g)
{
    const ScalarField af = apply_operator(s, f);
    const ScalarField ag = apply_operator(s, g);
    const double scale = pair_scale(s, f, g, af, ag);
    const double diff = std::abs(inner(s, f, ag) - mixed_volume(s.grid, f, g, s.f2_original));
    return scale == 0.0 ? diff : diff / scale;
}

SparseMatrix robin_extension(const CapGrid& g)
{
    const int np = g.n_phi();
    const Index interior = static_cast<Index>(g.n_rho()) * np;
    const int nb = g.boundary_ring();
    const double cot = std::cos(g.theta()) / std::sin(g.theta());

    double self = -cot;
    for (const RadialTap& t : g.d1(nb)) {
        if (t.ring == nb && !t.flip) {
            self += t.weight;
        }
    }
    SparseMatrix p(g.node_count(), interior);
    p.reserve(Eigen::VectorXi::Constant(g.node_count(), static_cast<int>(g.d1(nb).size())));
    for (Index k = 0; k < interior; ++k) {
        p.insert(k, k) = 1.0;
    }
    for (int j = 0; j < np; ++j) {
        const Index row = g.index(nb, j);
        std::vector<std::pair<Index, double>> entries;
        for (const RadialTap& t : g.d1(nb)) {
            if (t.ring == nb && !t.flip) {
                continue;
            }
            entries.emplace_back(g.index(t.ring, t.flip ? (j + np / 2) % np : j), -t.weight / self);
        }
        std::sort(entries.begin(), entries.end());
        for (const auto& [c, v] : entries) {
            p.coeffRef(row, c) += v;
        }
    }
    p.makeCompressed();
    return p;
}

namespace {

struct Collocation {
    SparseMatrix p;
    Eigen::SparseMatrix<double> c; // interior rows and columns
    double asymmetry = 0.0;
};

// Interior rows of A composed with the Robin extension: the eigenproblem
// C v = lambda v on interior values.
Collocation collocate(const WeightedSpace& s)
{
    Collocation out;
    out.p = robin_extension(s.grid);
    const Index ni = out.p.cols();
    const SparseMatrix full = assemble_operator(s) * out.p;
    out.c = Eigen::SparseMatrix<double>(full.topRows(ni));

    const Eigen::VectorXd root = s.weights.head(ni).cwiseSqrt();
    const Eigen::SparseMatrix<double> scaled = root.asDiagonal() * out.c * root.cwiseInverse().asDiagonal();
    const Eigen::SparseMatrix<double> scaled_t = scaled.transpose();
    const double total = scaled.norm();
    out.asymmetry = total == 0.0 ? 0.0 : Eigen::SparseMatrix<double>(scaled - scaled_t).norm() / total;
    return out;
}

struct EigenPairs {
    std::vector<double> values;
    std::vector<double> imag;
    Eigen::MatrixXd vectors; // interior coordinates
    std::vector<double> solver_residuals;
};

double pair_residual(const Eigen::SparseMatrix<double>& c, const Eigen::VectorXd& v, double lambda)
{
    const double nv = v.norm();
    return nv == 0.0 ? 0.0 : (c * v - lambda * v).norm() / nv;
}

EigenPairs dense_solve(const Collocation& col, int how_many, std::vector<double>& all_values)
{
    const Index n = col.c.rows();
    Eigen::MatrixXd a = Eigen::MatrixXd(col.c);
    Eigen::VectorXd wr(n);
    Eigen::VectorXd wi(n);
    Eigen::MatrixXd vr(n, n);
    double unused = 0.0;
    const lapack_int info =
        LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n), a.data(), static_cast<lapack_int>(n),
                      wr.data(), wi.data(), &unused, 1, vr.data(), static_cast<lapack_int>(n));
    if (info != 0) {
        throw Error(ErrorCode::SolverFailure, "dense eigensolve failed, info = " + std::to_string(info));
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return wr[x] > wr[y]; });
    all_values.clear();
    for (const Index k : order) {
        all_values.push_back(wr[k]);
    }
    const int count = static_cast<int>(std::min<Index>(how_many, n));
    EigenPairs out;
    out.vectors.resize(n, count);
    for (int c = 0; c < count; ++c) {
        const Index k = order[static_cast<std::size_t>(c)];
        // for a conjugate pair LAPACK stores the real part in the first column
        const Index first = (wi[k] < 0.0) ? k - 1 : k;
        out.values.push_back(wr[k]);
        out.imag.push_back(wi[k]);
        out.vectors.col(c) = vr.col(first);
        out.solver_residuals.push_back(wi[k] == 0.0 ? pair_residual(col.c, vr.col(first), wr[k])
                                                    : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

// LU of a square sparse matrix in LAPACK band storage.
class BandedLu {
public:
    explicit BandedLu(const Eigen::SparseMatrix<double>& a) : n_(static_cast<lapack_int>(a.rows()))
    {
        for (Index c = 0; c < a.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
                const Index r = it.row();
                kl_ = std::max<lapack_int>(kl_, static_cast<lapack_int>(r - c));
                ku_ = std::max<lapack_int>(ku_, static_cast<lapack_int>(c - r));
            }
        }
        ld_ = 2 * kl_ + ku_ + 1;
        ab_.assign(static_cast<std::size_t>(ld_) * static_cast<std::size_t>(n_), 0.0);
        for (Index c = 0; c < a.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
                ab_[static_cast<std::size_t>(kl_ + ku_ + it.row() - c) + static_cast<std::size_t>(c) * ld_] =
                    it.value();
            }
        }
        ipiv_.resize(static_cast<std::size_t>(n_));
        const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, ab_.data(), ld_, ipiv_.data());
        if (info != 0) {
            throw Error(ErrorCode::SolverFailure,
                        "banded factorization of the shifted operator failed, info = " + std::to_string(info));
        }
    }

    void solve(Eigen::MatrixXd& b) const
    {
        const lapack_int info =
            LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, static_cast<lapack_int>(b.cols()), ab_.data(), ld_,
                           ipiv_.data(), b.data(), static_cast<lapack_int>(b.rows()));
        if (info != 0) {
            throw Error(ErrorCode::SolverFailure, "banded solve failed, info = " + std::to_string(info));
        }
    }

private:
    lapack_int n_ = 0;
    lapack_int kl_ = 0;
    lapack_int ku_ = 0;
    lapack_int ld_ = 0;
    std::vector<double> ab_;
    std::vector<lapack_int> ipiv_;
};

extern "C" {
void dnaupd_(int* ido, const char* bmat, const int* n, const char* which, const int* nev, const double* tol,
             double* resid, const int* ncv, double* v, const int* ldv, int* iparam, int* ipntr, double* workd,
             double* workl, const int* lworkl, int* info, std::size_t bmat_len, std::size_t which_len);
void dneupd_(const int* rvec, const char* howmny, int* select, double* dr, double* di, double* z, const int* ldz,
             const double* sigmar, const double* sigmai, double* workev, const char* bmat, const int* n,
             const char* which, const int* nev, const double* tol, double* resid, const int* ncv, double* v,
             const int* ldv, int* iparam, int* ipntr, double* workd, double* workl, const int* lworkl, int* info,
             std::size_t howmny_len, std::size_t bmat_len, std::size_t which_len);
}

// Implicitly restarted Arnoldi (ARPACK) on (C - shift)^-1: the eigenvalues
// nearest the shift. `reach` is the largest distance from the shift among the
// returned values.
EigenPairs iterative_solve(const Collocation& col, const SpectrumOptions& opts, double& reach)
{
    const int n = static_cast<int>(col.c.rows());
    const int nev = std::min(opts.how_many, n - 2);
    const int ncv = std::min(n, std::max(2 * nev + 1, 24));
    Eigen::SparseMatrix<double> shifted = col.c;
    for (Index k = 0; k < n; ++k) {
        shifted.coeffRef(k, k) -= opts.shift;
    }
    const BandedLu lu(shifted);

    // deterministic start vector
    std::mt19937_64 rng(0x5eed);
    std::vector<double> resid(static_cast<std::size_t>(n));
    for (double& x : resid) {
        x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    }
    std::vector<double> v(static_cast<std::size_t>(n) * ncv);
    std::vector<double> workd(3 * static_cast<std::size_t>(n));
    const int lworkl = 3 * ncv * ncv + 6 * ncv;
    std::vector<double> workl(static_cast<std::size_t>(lworkl));
    int iparam[11] = {1, 0, opts.max_iterations, 1, 0, 0, 3, 0, 0, 0, 0};
    int ipntr[14] = {};
    int ido = 0;
    int info = 1; // use resid as the start vector
    const double tol = opts.convergence;
    Eigen::MatrixXd x(n, 1);
    while (true) {
        dnaupd_(&ido, "I", &n, "LM", &nev, &tol, resid.data(), &ncv, v.data(), &n, iparam, ipntr, workd.data(),
                workl.data(), &lworkl, &info, 1, 2);
        if (ido != -1 && ido != 1) {
            break;
        }
        x = Eigen::Map<const Eigen::VectorXd>(&workd[static_cast<std::size_t>(ipntr[0] - 1)], n);
        lu.solve(x);
        Eigen::Map<Eigen::VectorXd>(&workd[static_cast<std::size_t>(ipntr[1] - 1)], n) = x.col(0);
    }
    if (info != 0) {
        std::ostringstream msg;
        msg << "Arnoldi iteration failed (info " << info << ", " << iparam[4] << " of " << nev
            << " eigenvalues converged after " << iparam[2] << " restarts)";
        throw Error(ErrorCode::SolverFailure, msg.str());
    }

    const int rvec = 1;
    std::vector<int> select(static_cast<std::size_t>(ncv));
    std::vector<double> dr(static_cast<std::size_t>(nev) + 1);
    std::vector<double> di(static_cast<std::size_t>(nev) + 1);
    Eigen::MatrixXd z(n, nev + 1);
    std::vector<double> workev(3 * static_cast<std::size_t>(ncv));
    const double sigmar = opts.shift;
    const double sigmai = 0.0;
    dneupd_(&rvec, "A", select.data(), dr.data(), di.data(), z.data(), &n, &sigmar, &sigmai, workev.data(), "I", &n,
            "LM", &nev, &tol, resid.data(), &ncv, v.data(), &n, iparam, ipntr, workd.data(), workl.data(), &lworkl,
            &info, 1, 1, 2);
    if (info != 0) {
        throw Error(ErrorCode::SolverFailure, "Ritz vector extraction failed, info = " + std::to_string(info));
    }
    const int found = iparam[4];

    std::vector<int> idx(static_cast<std::size_t>(found));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return dr[a] > dr[b]; });
    EigenPairs out;
    out.vectors.resize(n, found);
    reach = 0.0;
    for (int c = 0; c < found; ++c) {
        const int k = idx[static_cast<std::size_t>(c)];
        // for a conjugate pair the first column holds the real part
        const int first = (di[k] < 0.0 && k > 0) ? k - 1 : k;
        out.values.push_back(dr[k]);
        out.imag.push_back(di[k]);
        out.vectors.col(c) = z.col(first);
        out.solver_residuals.push_back(di[k] == 0.0 ? pair_residual(col.c, z.col(first), dr[k])
                                                    : std::numeric_limits<double>::quiet_NaN());
        reach = std::max(reach, std::abs(std::complex<double>(dr[k] - opts.shift, di[k])));
    }
    return out;
}

} // namespace

SpectrumReport spectrum(const WeightedSpace& s, const SpectrumOptions& opts, const ToleranceProfile& tol)
{
    if (opts.how_many < 1) {
        throw Error(ErrorCode::IndexOutOfRange, "how_many must be positive");
    }
    const CapGrid& g = s.grid;
    std::string method = opts.method;
    if (method == "auto") {
        method = static_cast<long>(g.n_rho()) * g.n_phi() <= 48L * 64L ? "dense" : "iterative";
    }
    if (method != "dense" && method != "iterative") {
        throw Error(ErrorCode::Parse, "unknown eigensolver method '" + opts.method + "'");
    }
    const Collocation col = collocate(s);

    SpectrumReport r;
    r.theta = g.theta();
    r.n_rho = g.n_rho();
    r.n_phi = g.n_phi();
    r.asymmetry = col.asymmetry;
    r.spectral_delta = tol.spectral_delta;

    EigenPairs pairs;
    std::vector<double> all_values;
    if (method == "dense") {
        r.method = "dense";
        pairs = dense_solve(col, opts.how_many, all_values);
        r.band_certified = true;
    } else {
        r.method = "shift-invert-arnoldi";
        double reach = 0.0;
        pairs = iterative_solve(col, opts, reach);
        all_values = pairs.values;
        // every eigenvalue within `reach` of the shift has been found
        r.band_certified = opts.shift - reach <= tol.spectral_delta && opts.shift + reach >= 1.0 - tol.spectral_delta;
    }

    r.eigenvalues = pairs.values;
    r.imag_parts = pairs.imag;
    r.solver_residuals = pairs.solver_residuals;
    for (Index c = 0; c < pairs.vectors.cols(); ++c) {
        ScalarField v = col.p * pairs.vectors.col(c);
        v /= norm(s, v);
        // deterministic sign: largest-magnitude node positive
        Index at = 0;
        v.cwiseAbs().maxCoeff(&at);
        if (v[at] < 0.0) {
            v = -v;
        }
        // the eigen equation holds on interior nodes; boundary nodes carry the Robin condition
        const ScalarField defect = apply_operator(s, v) - r.eigenvalues[static_cast<std::size_t>(c)] * v;
        const Index ni = col.p.cols();
        r.residuals.push_back(std::sqrt(sum_products(s.weights.head(ni), defect.head(ni), defect.head(ni))));
        r.eigenvectors.push_back(std::move(v));
    }

    const double lambda1 = r.eigenvalues.front();
    r.lambda1_index = 0;
    r.gap = r.eigenvalues.size() > 1 ? lambda1 - r.eigenvalues[1] : std::numeric_limits<double>::infinity();
    r.lambda1_simple = r.gap >= 1.0 - 2.0 * tol.spectral_delta;
    r.kernel_threshold = tol.kernel_rel * std::abs(lambda1);
    for (std::size_t c = 0; c < r.eigenvalues.size(); ++c) {
        if (std::abs(r.eigenvalues[c]) <= r.kernel_threshold && r.imag_parts[c] == 0.0) {
            r.kernel_indices.push_back(static_cast<int>(c));
        }
    }
    for (std::size_t c = 0; c < all_values.size(); ++c) {
        const double v = all_values[c];
        if (v > tol.spectral_delta && v < 1.0 - tol.spectral_delta) {
            r.band_violations.push_back(static_cast<int>(c));
        }
    }
    // omega-projection of each horizontal linear onto the kernel span
    const Index kn = static_cast<Index>(r.kernel_indices.size());
    Eigen::MatrixXd gram(kn, kn);
    for (Index a = 0; a < kn; ++a) {
        for (Index b = 0; b < kn; ++b) {
            gram(a, b) = inner(s, r.eigenvectors[static_cast<std::size_t>(r.kernel_indices[a])],
                               r.eigenvectors[static_cast<std::size_t>(r.kernel_indices[b])]);
        }
    }
    for (const ScalarField& lin : {linear_e1(g), linear_e2(g)}) {
        double cosine = 0.0;
        if (kn > 0) {
            Eigen::VectorXd proj(kn);
            for (Index a = 0; a < kn; ++a) {
                proj[a] = inner(s, lin, r.eigenvectors[static_cast<std::size_t>(r.kernel_indices[a])]);
            }
            const Eigen::VectorXd coef = gram.ldlt().solve(proj);
            cosine = std::sqrt(std::max(0.0, proj.dot(coef))) / norm(s, lin);
        }
        r.kernel_cosines.push_back(cosine);
    }
    return r;
}

nlohmann::json to_json(const SpectrumReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t c = 0; c < r.eigenvalues.size(); ++c) {
        std::string cls = "tail";
        if (static_cast<int>(c) == r.lambda1_index) {
            cls = "lambda1";
        } else if (std::find(r.kernel_indices.begin(), r.kernel_indices.end(), static_cast<int>(c)) !=
                   r.kernel_indices.end()) {
            cls = "kernel";
        }
        rows.push_back({{"index", c},
                        {"eigenvalue", r.eigenvalues[c]},
                        {"imag", r.imag_parts[c]},
                        {"residual", r.residuals[c]},
                        {"solver_residual", r.solver_residuals[c]},
                        {"class", cls}});
    }
    return {{"method", r.method},
            {"theta", r.theta},
            {"grid", {{"n_rho", r.n_rho}, {"n_phi", r.n_phi}}},
            {"eigenpairs", rows},
            {"asymmetry", r.asymmetry},
            {"lambda1", r.eigenvalues.front()},
            {"lambda1_simple", r.lambda1_simple},
            {"gap", r.gap},
            {"kernel_count", r.kernel_indices.size()},
            {"kernel_threshold", r.kernel_threshold},
            {"kernel_cosines", r.kernel_cosines},
            {"spectral_delta", r.spectral_delta},
            {"band_violations", r.band_violations.size()},
            {"band_certified", r.band_certified}};
}

std::string to_csv(const SpectrumReport& r)
{
    const nlohmann::json j = to_json(r);
    std::ostringstream out;
    out.precision(17);
    out << "index,eigenvalue,residual,class\n";
    for (const auto& row : j["eigenpairs"]) {
        out << row["index"].get<int>() << ',' << row["eigenvalue"].get<double>() << ','
            << row["residual"].get<double>() << ',' << row["class"].get<std::string>() << '\n';
    }
    return out.str();
}

EqualityDecomposition equality_decompose(const WeightedSpace& s, const ScalarField& f, const ScalarField& f1)
{
    check_shape(s.grid, f);
    check_shape(s.grid, f1);
    const std::array<ScalarField, 3> basis{f1, linear_e1(s.grid), linear_e2(s.grid)};
    Eigen::Matrix3d gram;
    Eigen::Vector3d rhs;
    for (int a = 0; a < 3; ++a) {
        rhs[a] = inner(s, basis[a], f);
        for (int b = 0; b < 3; ++b) {
            gram(a, b) = inner(s, basis[a], basis[b]);
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(gram);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    EqualityDecomposition d;
    d.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(d.condition <= kIllConditioned)) {
        throw Error(ErrorCode::IllConditioned, "f1 is nearly a horizontal linear function");
    }
    const Eigen::Vector3d c = gram.ldlt().solve(rhs);
    d.a = c[0];
    d.a1 = c[1];
    d.a2 = c[2];
    const ScalarField res = f - c[0] * basis[0] - c[1] * basis[1] - c[2] * basis[2];
    const double nf = norm(s, f);
    d.residual_norm = nf == 0.0 ? norm(s, res) : norm(s, res) / nf;
    return d;
}

AfResult af_check(const WeightedSpace& s, const ScalarField& f, const ScalarField& f1, const ToleranceProfile& tol)
{
    const CapGrid& g = s.grid;
    check_shape(g, f);
    check_shape(g, f1);
    const ScalarField& f2 = s.f2_original;
    const double v_f_f1 = mixed_volume(g, f, f1, f2);
    const double v_f_f = mixed_volume(g, f, f, f2);
    const double v_f1_f1 = mixed_volume(g, f1, f1, f2);

    AfResult r;
    r.lhs = v_f_f1 * v_f_f1;
    r.rhs = v_f_f * v_f1_f1;
    r.gap = r.lhs - r.rhs;
    r.relative_gap = r.rhs == 0.0 ? r.gap : r.gap / std::abs(r.rhs);

    const ScalarField af1 = apply_operator(s, f1);
    const double b_f_f1 = inner(s, f, af1);
    r.form_lhs = b_f_f1 * b_f_f1;
    r.form_rhs = inner(s, f, apply_operator(s, f)) * inner(s, f1, af1);
    auto rel = [](double a, double b) {
        const double m = std::max(std::abs(a), std::abs(b));
        return m == 0.0 ? 0.0 : std::abs(a - b) / m;
    };
    r.form_agreement = std::max(rel(r.lhs, r.form_lhs), rel(r.rhs, r.form_rhs));

    // Discretization error from the permutation asymmetry of each factor.
    const double d_f_f1 = std::abs(v_f_f1 - mixed_volume(g, f1, f, f2));
    const double d_f_f = std::abs(v_f_f - mixed_volume(g, f2, f, f));
    const double d_f1_f1 = std::abs(v_f1_f1 - mixed_volume(g, f2, f1, f1));
    r.error_estimate = 2.0 * std::abs(v_f_f1) * d_f_f1 + std::abs(v_f1_f1) * d_f_f + std::abs(v_f_f) * d_f1_f1 +
                       64.0 * std::numeric_limits<double>::epsilon() * (std::abs(r.lhs) + std::abs(r.rhs));

    if (std::abs(r.gap) <= tol.equality_factor * r.error_estimate) {
        r.verdict = "equality within resolution";
        try {
            r.decomposition = equality_decompose(s, f, f1);
        } catch (const Error&) {
            r.decomposition.reset();
        }
    } else if (r.gap >= -tol.noise_budget * std::abs(r.rhs)) {
        r.verdict = "holds";
    } else {
        r.verdict = "violated";
    }
    return r;
}

nlohmann::json to_json(const EqualityDecomposition& d)
{
    return {{"a", d.a}, {"a_1", d.a1}, {"a_2", d.a2}, {"residual_norm", d.residual_norm}, {"condition", d.condition}};
}

nlohmann::json to_json(const AfResult& r)
{
    nlohmann::json j = {{"lhs", r.lhs},
                        {"rhs", r.rhs},
                        {"gap", r.gap},
                        {"relative_gap", r.relative_gap},
                        {"form_lhs", r.form_lhs},
                        {"form_rhs", r.form_rhs},
                        {"form_agreement", r.form_agreement},
                        {"error_estimate", r.error_estimate},
                        {"verdict", r.verdict}};
    j["decomposition"] = r.decomposition ? to_json(*r.decomposition) : nlohmann::json(nullptr);
    return j;
}

ChainReport af_chain_check(const CapGrid& grid, const ScalarField& h0, const ScalarField& h1, int m,
                           const std::vector<ScalarField>& refs, const ToleranceProfile& tol)
{
    if (m < 2 || m > 3) {
        throw Error(ErrorCode::IndexOutOfRange, "chain length m must be 2 or 3");
    }
    check_shape(grid, h0);
    check_shape(grid, h1);
    std::vector<ScalarField> extra = refs;
    if (extra.empty()) {
        extra.assign(static_cast<std::size_t>(3 - m), ell_values(grid));
    }
    if (static_cast<int>(extra.size()) != 3 - m) {
        throw Error(ErrorCode::IndexOutOfRange, "need exactly 3 - m reference fields");
    }
    for (const auto& e : extra) {
        check_shape(grid, e);
    }

    ChainReport r;
    r.m = m;
    for (int i = 0; i <= m; ++i) {
        std::vector<const ScalarField*> args;
        for (int c = 0; c < m - i; ++c) {
            args.push_back(&h0);
        }
        for (int c = 0; c < i; ++c) {
            args.push_back(&h1);
        }
        for (const auto& e : extra) {
            args.push_back(&e);
        }
        r.values.push_back(mixed_volume(grid, *args[0], *args[1], *args[2]));
    }
    for (int i = 0; i <= m; ++i) {
        for (int j = i + 1; j <= m; ++j) {
            for (int k = j + 1; k <= m; ++k) {
                ChainEntry e{i, j, k};
                e.lhs = std::pow(r.values[j], k - i);
                e.rhs = std::pow(r.values[i], k - j) * std::pow(r.values[k], j - i);
                e.slack = e.lhs - e.rhs;
                e.relative_slack = e.rhs == 0.0 ? e.slack : e.slack / std::abs(e.rhs);
                e.ok = e.slack >= -tol.noise_budget * std::abs(e.rhs);
                r.all_ok = r.all_ok && e.ok;
                r.entries.push_back(e);
            }
        }
    }
    return r;
}

ChainReport quermass_chain(const CapillaryBody& body, const ToleranceProfile& tol)
{
    const CapGrid& g = body.grid();
    ChainReport r = af_chain_check(g, body.values(), ell_values(g), 3, {}, tol);
    const double b = cap_volume(g.theta());
    for (int k = 1; k <= 2; ++k) {
        for (int l = 0; l < k; ++l) {
            NormalizedEntry e{l, k};
            e.lhs = r.values[k] / b;
            e.rhs = std::pow(r.values[l] / b, static_cast<double>(3 - k) / (3 - l));
            e.relative_slack = (e.lhs - e.rhs) / std::abs(e.rhs);
            e.ok = e.relative_slack >= -tol.noise_budget;
            r.all_ok = r.all_ok && e.ok;
            r.normalized.push_back(e);
        }
    }
    return r;
}

nlohmann::json to_json(const ChainReport& r)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"i", e.i},
                           {"j", e.j},
                           {"k", e.k},
                           {"lhs", e.lhs},
                           {"rhs", e.rhs},
                           {"slack", e.slack},
                           {"relative_slack", e.relative_slack},
                           {"ok", e.ok}});
    }
    nlohmann::json norm = nlohmann::json::array();
    for (const auto& e : r.normalized) {
        norm.push_back({{"l", e.l},
                        {"k", e.k},
                        {"lhs", e.lhs},
                        {"rhs", e.rhs},
                        {"relative_slack", e.relative_slack},
                        {"ok", e.ok}});
    }
    return {{"m", r.m}, {"values", r.values}, {"chains", entries}, {"normalized", norm}, {"all_ok", r.all_ok}};
}

} // namespace capaf

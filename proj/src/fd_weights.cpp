#include "capaf/fd_weights.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace capaf {

Eigen::MatrixXd fornberg_weights(double z, std::span<const double> x, int m)
{
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
    double c1 = 1.0;
    double c4 = x[0] - z;
    c(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                }
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k) {
                c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            }
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& t, std::vector<double>& w)
{
    t.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                p0 = 1.0;
                p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dpf = n * (x * p1 - p0) / (x * x - 1.0);
                t[i] = x;
                w[i] = 2.0 / ((1.0 - x * x) * dpf * dpf);
                break;
            }
        }
    }
}

} // namespace

Eigen::VectorXd interpolatory_weights(double a, double b, std::span<const double> nodes)
{
    const int n = static_cast<int>(nodes.size());
    std::vector<double> t;
    std::vector<double> gw;
    gauss_legendre(n / 2 + 2, t, gw);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < t.size(); ++q) {
        const double x = mid + half * t[q];
        for (int k = 0; k < n; ++k) {
            double basis = 1.0;
            for (int s = 0; s < n; ++s) {
                if (s != k) {
                    basis *= (x - nodes[s]) / (nodes[k] - nodes[s]);
                }
            }
            out[k] += half * gw[q] * basis;
        }
    }
    return out;
}

Eigen::MatrixXd periodic_d1(int n)
{
    const double h = 2.0 * std::numbers::pi / n;
    Eigen::MatrixXd d(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            if (j == k) {
                d(j, k) = 0.0;
            } else {
                const int diff = j - k;
                const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
                d(j, k) = 0.5 * sign / std::tan(0.5 * diff * h);
            }
        }
    }
    return d;
}

Eigen::MatrixXd periodic_d2(int n)
{
    const double h = 2.0 * std::numbers::pi / n;
    Eigen::MatrixXd d(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            if (j == k) {
                d(j, k) = -std::numbers::pi * std::numbers::pi / (3.0 * h * h) - 1.0 / 6.0;
            } else {
                const int diff = j - k;
                const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
                const double s = std::sin(0.5 * diff * h);
                d(j, k) = -0.5 * sign / (s * s);
            }
        }
    }
    return d;
}

} // namespace capaf

#pragma once

// Test-only oracles, independent of the library code paths they check.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracles {

/// Adaptive Simpson quadrature.
inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, eps * 0.5, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, eps * 0.5, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps = 1e-10, int depth = 40) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, eps, depth);
}

/// Gauss-Hermite nodes/weights for the standard normal weight (probabilists'),
/// by Golub-Welsch on the Jacobi matrix of He_n.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussHermite gauss_hermite(int n) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        const double b = std::sqrt(static_cast<double>(i + 1));
        jac(i, i + 1) = b;
        jac(i + 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    GaussHermite gh;
    gh.nodes.resize(static_cast<std::size_t>(n));
    gh.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        gh.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
        const double v0 = es.eigenvectors()(0, i);
        gh.weights[static_cast<std::size_t>(i)] = v0 * v0;
    }
    return gh;
}

/// E[F(xi)] for F a function of r i.i.d. standard normals, exact for
/// polynomials of per-variable degree < 2n.
inline double normal_expectation(int r, int n,
                                 const std::function<double(std::span<const double>)>& f) {
    const GaussHermite gh = gauss_hermite(n);
    std::vector<double> xi(static_cast<std::size_t>(r), 0.0);
    double acc = 0.0;
    std::function<void(int, double)> rec = [&](int k, double w) {
        if (k == r) {
            acc += w * f(xi);
            return;
        }
        for (int i = 0; i < n; ++i) {
            xi[static_cast<std::size_t>(k)] = gh.nodes[static_cast<std::size_t>(i)];
            rec(k + 1, w * gh.weights[static_cast<std::size_t>(i)]);
        }
    };
    rec(0, 1.0);
    return acc;
}

/// Central finite difference of order `order` along a direction mix, for
/// spot-checking analytic partial derivatives.
inline double central_diff(const std::function<double(double)>& f, double h, int order) {
    switch (order) {
    case 1:
        return (f(h) - f(-h)) / (2.0 * h);
    case 2:
        return (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    default:
        return 0.0;
    }
}

} // namespace oracles

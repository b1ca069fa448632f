#pragma once

#include "gplab/gaussian_model.hpp"
#include "gplab/grid.hpp"
#include "gplab/test_function.hpp"

#include <vector>

namespace gplab {

/// Wick-Riemann sum split into the buckets of the convergence proof:
/// theta1  - pure increment-power terms of total order <= N (Stratonovich-type),
/// theta2  - pure increment-power terms of order N+1..2N,
/// theta3  - the Laplacian x deltaR terms (one slot per coordinate),
/// theta_tilde - remaining deltaR-carrying terms, which must vanish under
///               refinement. total is the sum of all buckets by construction.
struct WickSumBreakdown {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta_tilde = 0.0;
    double total = 0.0;
    std::vector<double> theta3;

    double theta3_total() const {
        double s = 0.0;
        for (double v : theta3)
            s += v;
        return s;
    }
};

/// Pathwise evaluation of the Wick-Riemann sum S^{Pi,wick} through its
/// ordinary-product expansion: for multi-indices q (1 <= |q| <= 2N) and
/// u_k <= q_k/2 with |q| - |u| <= N (the pairs the order-N expansion
/// generates), the term
///   d^q f(x_{t_i}) prod_k [(-1)^{u_k} / (u_k! (q_k-2u_k)!)]
///                  (deltaR_i / 2)^{u_k} (dx_i(k))^{q_k - 2u_k}.
/// No randomness beyond the path itself is consumed.
WickSumBreakdown riemann_wick_sum(const TestFunction& f, const GridPath& path,
                                  const GaussianModel& model, int order);

/// f(x_t) - f(x_s) - (1/2) int_s^t Laplacian f(x_rho) R'_rho drho, the
/// trajectory piecewise-linearly interpolated; the integral is evaluated per
/// grid cell in the R-measure (trapezoid against exact variance increments),
/// which absorbs the R' singularity at 0. s and t must be grid points.
double ito_skorohod_rhs(const TestFunction& f, const GridPath& path, const GaussianModel& model,
                        double s, double t, int subdiv = 8);

/// Exact order-1 Wick sum sum_i [f'(x_i) dx_i - f''(x_i) E(x_{t_i} dx_i)],
/// with the cross moment taken from the model covariance (d = 1).
double first_order_wick_sum(const TestFunction& f, const GridPath& path,
                            const GaussianModel& model);

struct SkorohodConvergenceRow {
    std::size_t path_id = 0;
    int level = 0;
    WickSumBreakdown breakdown;
    double rhs = 0.0;
    double abs_err = 0.0;
};

struct SkorohodConvergence {
    std::vector<SkorohodConvergenceRow> rows; // path-major, level-minor
    std::vector<double> mesh;                 // per level
    std::vector<double> median_abs_err;       // per level
    double observed_order = 0.0;              // slope of log median against log mesh
};

/// Per-path |S^{Pi,wick} - ito_skorohod_rhs| across dyadic coarsenings of the
/// sampler's partition (level k keeps every 2^(levels-k)-th point).
SkorohodConvergence skorohod_convergence(const TestFunction& f, const PathSampler& sampler,
                                         std::size_t n_samples, int levels, int order,
                                         unsigned workers = 1);

struct DualityReport {
    double lhs = 0.0;
    double lhs_se = 0.0;
    double rhs = 0.0;
    double rhs_se = 0.0;
    double z = 0.0; // paired z-score of lhs - rhs
    double phi_norm_sq = 0.0;
    std::size_t n_samples = 0;
    bool degenerate = false;
};

/// Monte-Carlo test of the defining duality of the extended divergence with
/// u = 1_{[s,t)} grad f(x): E[delta(u) H_n(x(phi))] against
/// int_s^t < E[H_{n-1}(x(phi)) grad f(x_rho)], A phi(rho) > drho.
/// H_n is the variance-||phi||^2 Hermite polynomial divided by n!, so that
/// H_n' = H_{n-1}; x(phi) is realized as -int <x, phi'> by trapezoid
/// quadrature with at least `xphi_nodes` nodes over each bump support.
DualityReport duality_check(const TestFunction& f, const std::vector<BumpFunction>& phi, int n,
                            const PathSampler& sampler, std::size_t n_samples, double s, double t,
                            unsigned workers = 1, int xphi_nodes = 512);

struct WeightedLevelDiagnostics {
    int level = 0;
    std::size_t cells = 0;
    double mean_v2_one = 0.0;   // ensemble mean of V^(2)(1), zero in expectation
    double se_v2_one = 0.0;
    double z_v2_one = 0.0;
    double var_v2_one = 0.0;          // empirical variance
    double var_v2_one_scaled = 0.0;   // x cells^{4H-1}
    double isserlis_var_v2_one = 0.0; // exact fourth-moment oracle
    double mean_v3_scaled = 0.0;      // cells^{4H-1} x mean of V~^(3)(g)
    double ref_v3 = 0.0;              // mean of -(3/2) int g'(B_u) du
    double max_split_residual = 0.0;  // order-1 Wick sum vs four-term assembly
};

struct WeightedSumDiagnostics {
    double hurst = 0.0;
    std::vector<WeightedLevelDiagnostics> levels;
};

/// The comparison diagnostics for a one-dimensional fBm ensemble: compensated
/// quadratic sums V^(2), cubic sums V~^(3), their scaling across dyadic
/// levels, the exact Isserlis variance of V^(2)(1), and the per-path
/// decomposition of the order-1 Wick sum
///   S~ = S^{Pi,3} - (1/2) sum f'' deltaR - (1/2) V^(2)(f'') - (1/6) V~^(3)(f''').
WeightedSumDiagnostics weighted_sum_diagnostics(const TestFunction& g, const TestFunction& f,
                                                const PathSampler& sampler,
                                                std::size_t n_samples, int levels,
                                                unsigned workers = 1);

/// Isserlis-oracle variance of V^(2)(1) on a partition: 2 sum_{jk} Cov(dB_j, dB_k)^2.
double isserlis_variance_v2(const GaussianModel& model, const Partition& part);

} // namespace gplab

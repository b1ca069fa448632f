#pragma once

#include "gplab/grid.hpp"
#include "gplab/rough_path.hpp"
#include "gplab/test_function.hpp"

#include <string>
#include <vector>

namespace gplab {

/// Taylor coefficient stacks of f(x) as a weakly controlled path:
/// zeta^k at each grid point is the full d^k derivative tensor, and rem^k is
/// the order-(N-k) Taylor remainder of the k-th derivative on adjacent cells.
struct ControlledDecomposition {
    std::size_t d = 0;
    int order = 0; // N
    // zeta[k-1]: (n+1) x d^k, tuple-indexed row-major, k = 1..N-1
    std::vector<std::vector<double>> zeta;
    // rem[k]: cells x d^k, k = 0..N-1
    std::vector<std::vector<double>> rem;
};

ControlledDecomposition controlled_decomposition(const TestFunction& f, const GridPath& path,
                                                 int order);

enum class StratoVariant { Levels, Powers };

StratoVariant strato_variant_from_string(const std::string& s);

/// Single-partition modified Riemann sum of orders 1..N:
///   Levels: sum_q sum_n <d^n f(x_q), x^n_{q,q+1}>        (needs lift level >= N)
///   Powers: sum_q sum_n (1/n!) <d^n f(x_q), dx^{(x) n}>  (level-1 data only)
/// The two agree within the lift's shuffle residual.
double strato_sum(const TestFunction& f, const GridPath& path, const RoughLift& lift,
                  int order, StratoVariant variant);

/// |f(x_t) - f(x_s) - strato_sum| across dyadic coarsenings of a finest path.
/// Level k uses every 2^(levels-k)-th point of `finest`.
ConvergenceTable change_of_variable_residual(const TestFunction& f, const GridPath& finest,
                                             int levels, int order, StratoVariant variant);

/// Generic controlled integrand: first-order coefficients m (one d-vector per
/// grid point) and higher stacks mu[k] contracted against lift level k+1.
struct ControlledIntegrand {
    std::size_t d = 0;
    std::vector<double> m;                // (n+1) x d
    std::vector<std::vector<double>> mu;  // mu[k-1]: (n+1) x d^{k+1}, k = 1..K
};

/// Integrand of the change-of-variable formula: m = grad f, mu^k = d^{k+1} f.
ControlledIntegrand gradient_integrand(const TestFunction& f, const GridPath& path, int order);

/// Compensated sum over the sub-partition between every pair of endpoints:
/// result(i,j) = sum_{q=i}^{j-1} [ <m_q, x^1> + sum_k mu^k_q . x^{k+1} ].
GridFunction2 integrate_controlled(const ControlledIntegrand& integrand, const RoughLift& lift);

} // namespace gplab

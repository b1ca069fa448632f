#pragma once

#include "gplab/test_function.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gplab {

/// Probabilists' Hermite polynomial by the three-term recurrence
/// He_{k+1} = x He_k - k He_{k-1}.
double hermite(int k, double x);
/// Same polynomial from the explicit alternating sum (cross-check route).
double hermite_explicit(int k, double x);
/// Variance-scaled Hermite: He_{k+1} = x He_k - k var He_{k-1}; He_k(x;1)
/// is the standard polynomial and He_k(x;0) = x^k.
double hermite_scaled(int k, double x, double var);

/// Sparse multivariate polynomial, exponent-vector keyed.
class Polynomial {
  public:
    using Exponents = std::vector<int>;

    explicit Polynomial(std::size_t vars) : vars_(vars) {}
    static Polynomial constant(std::size_t vars, double c);
    static Polynomial variable(std::size_t vars, std::size_t j);

    std::size_t vars() const { return vars_; }
    const std::map<Exponents, double>& terms() const { return terms_; }
    void add_term(Exponents e, double c);

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial scaled(double c) const;
    Polynomial partial(std::size_t var, int order = 1) const;
    /// Polynomial in more variables with this one's variables at `offset`.
    Polynomial embedded(std::size_t total_vars, std::size_t offset) const;

    double evaluate(std::span<const double> point) const;
    int degree() const;

  private:
    std::size_t vars_;
    std::map<Exponents, double> terms_;
};

/// Finite jointly-Gaussian family: m base variables with covariance Sigma,
/// orthonormalized by a factor L (m x r, Sigma = L L^T) onto i.i.d. standard
/// normals e_1..e_r. Rank is truncated at eigenvalues below 1e-12 * trace.
struct GaussianFamily {
    std::size_t m = 0;
    std::size_t r = 0;
    std::vector<double> sigma;  // m x m row-major
    std::vector<double> factor; // m x r row-major

    static GaussianFamily from_covariance(std::size_t m, std::vector<double> sigma);
    double factor_at(std::size_t i, std::size_t j) const { return factor[i * r + j]; }
    /// Least-squares xi with L xi = x (exact when the sample is in the range).
    std::vector<double> coordinates(std::span<const double> x) const;
};

/// Sorted basis-index multiset naming one symmetric-tensor cell.
using Multiset = std::vector<std::uint8_t>;

/// n! / prod(multiplicity!) : number of distinct orderings of the multiset.
double multiset_orderings(const Multiset& m);

/// Random variable sum_n I_n(f_n) over r orthonormal Gaussians. A kernel
/// coefficient is the entry of the full symmetric tensor at the sorted tuple,
/// so ||f_n||^2 = sum_M orderings(M) * coeff^2 and
/// I_n(f_n)(xi) = sum_M coeff * orderings(M) * prod_k He_{mult_k}(xi_k).
class ChaosExpansion {
  public:
    static constexpr int kMaxOrder = 16;
    static constexpr std::size_t kMaxRank = 8;

    explicit ChaosExpansion(std::size_t r) : r_(r) {}
    static ChaosExpansion constant(std::size_t r, double c);
    static ChaosExpansion first_order(std::vector<double> coeffs);
    /// The symmetrized basis element e_{j1} (sym) ... (sym) e_{jn}; its
    /// multiple integral evaluates to the bare Hermite product.
    static ChaosExpansion basis_element(std::size_t r, const Multiset& m, double coeff = 1.0);

    std::size_t rank() const { return r_; }
    int max_order() const;
    const std::map<Multiset, double>& kernel(int order) const;
    void add(int order, const Multiset& m, double coeff);

    double evaluate(std::span<const double> xi) const;
    double expectation() const;
    double second_moment() const;
    double kernel_norm_squared(int order) const;
    /// Largest |coefficient difference| against another expansion.
    double max_coefficient_deviation(const ChaosExpansion& o) const;
    void prune(double eps = 0.0);

  private:
    std::size_t r_;
    std::vector<std::map<Multiset, double>> kernels_;
};

/// I_n of a single kernel (multiset -> full-tensor coefficient) at the sample
/// xi of the orthonormal base: sum_M coeff * orderings(M) * prod He_{mult}(xi).
double multiple_integral_eval(const std::map<Multiset, double>& kernel,
                              std::span<const double> xi);

/// I_n(f_n) (sym-tensor) with I_m(g_m) -> I_{n+m}(f (sym) g), extended
/// bilinearly. Total order is capped at 16.
ChaosExpansion wick_product(const ChaosExpansion& a, const ChaosExpansion& b);
ChaosExpansion wick_power(const ChaosExpansion& a, int p);

/// Truncated exponential vector E(f) = sum_{n<=trunc} I_n(f^{(x) n})/n!.
ChaosExpansion exponential_vector(std::vector<double> coeffs, int trunc);

/// Expands a polynomial in the base variables into chaos kernels; evaluating
/// the result at xi reproduces poly(L xi) exactly.
ChaosExpansion polynomial_to_chaos(const GaussianFamily& family, const Polynomial& poly);

struct WickCorrectionReport {
    double lhs_value = 0.0;      // oracle Wick product, evaluated at the sample
    double rhs_value = 0.0;      // closed-form ordinary-product expression
    double max_coeff_dev = 0.0;  // kernel-by-kernel deviation of the two routes
};

/// Prop-basic check: G(X) wick Y^{wick p} against the closed-form correction
/// formula, coefficientwise in chaos and evaluated at (x_val, y_val).
WickCorrectionReport wick_correction_1d(const Polynomial& G, double var_x, double var_y,
                                        double cov_xy, int p, double x_val, double y_val);

/// Multidimensional version under the independence pattern: Y_k mutually
/// independent, X_j independent of Y_k for j != k.
WickCorrectionReport wick_correction_multi(const Polynomial& G, std::span<const double> var_x,
                                           std::span<const double> var_y,
                                           std::span<const double> cov_xy,
                                           std::span<const int> p, std::span<const double> x_val,
                                           std::span<const double> y_val);

/// Throws unless the 2d x 2d covariance (X_1..X_d, Y_1..Y_d) has zero
/// off-diagonal entries except the (X_k, Y_k) pairs.
void validate_independence_pattern(std::size_t d, std::span<const double> cov_2d);

/// Exact conversion of a polynomial TestFunction; throws on non-polynomial
/// factors.
Polynomial to_polynomial(const TestFunction& f);

} // namespace gplab

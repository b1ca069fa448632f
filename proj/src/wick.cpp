#include "gplab/wick.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gplab {

double hermite(int k, double x) { return hermite_scaled(k, x, 1.0); }

double hermite_scaled(int k, double x, double var) {
    if (k < 0)
        throw std::invalid_argument("hermite: negative order");
    if (k == 0)
        return 1.0;
    double hm = 1.0, h = x;
    for (int i = 1; i < k; ++i) {
        const double next = x * h - static_cast<double>(i) * var * hm;
        hm = h;
        h = next;
    }
    return h;
}

double hermite_explicit(int k, double x) {
    if (k < 0)
        throw std::invalid_argument("hermite_explicit: negative order");
    double acc = 0.0;
    for (int j = 0; 2 * j <= k; ++j) {
        double c = (j % 2 == 0) ? 1.0 : -1.0;
        for (int i = k - 2 * j + 1; i <= k; ++i)
            c *= static_cast<double>(i); // k! / (k-2j)!
        for (int i = 1; i <= j; ++i)
            c /= 2.0 * static_cast<double>(i); // 2^j j!
        acc += c * std::pow(x, k - 2 * j);
    }
    return acc;
}

Polynomial Polynomial::constant(std::size_t vars, double c) {
    Polynomial p(vars);
    if (c != 0.0)
        p.terms_[Exponents(vars, 0)] = c;
    return p;
}

Polynomial Polynomial::variable(std::size_t vars, std::size_t j) {
    Polynomial p(vars);
    Exponents e(vars, 0);
    e[j] = 1;
    p.terms_[e] = 1.0;
    return p;
}

void Polynomial::add_term(Exponents e, double c) {
    if (e.size() != vars_)
        throw std::invalid_argument("Polynomial::add_term: exponent arity mismatch");
    if (c == 0.0)
        return;
    auto [it, inserted] = terms_.try_emplace(std::move(e), c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0)
            terms_.erase(it);
    }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [e, c] : o.terms_)
        out.add_term(e, c);
    return out;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [e, c] : o.terms_)
        out.add_term(e, -c);
    return out;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    Polynomial out(vars_);
    for (const auto& [ea, ca] : terms_)
        for (const auto& [eb, cb] : o.terms_) {
            Exponents e(vars_);
            for (std::size_t i = 0; i < vars_; ++i)
                e[i] = ea[i] + eb[i];
            out.add_term(std::move(e), ca * cb);
        }
    return out;
}

Polynomial Polynomial::scaled(double c) const {
    Polynomial out(vars_);
    for (const auto& [e, v] : terms_)
        out.add_term(e, v * c);
    return out;
}

Polynomial Polynomial::partial(std::size_t var, int order) const {
    Polynomial out = *this;
    for (int k = 0; k < order; ++k) {
        Polynomial next(vars_);
        for (const auto& [e, c] : out.terms_) {
            if (e[var] == 0)
                continue;
            Exponents d = e;
            d[var] -= 1;
            next.add_term(std::move(d), c * static_cast<double>(e[var]));
        }
        out = next;
    }
    return out;
}

Polynomial Polynomial::embedded(std::size_t total_vars, std::size_t offset) const {
    if (offset + vars_ > total_vars)
        throw std::invalid_argument("Polynomial::embedded: does not fit");
    Polynomial out(total_vars);
    for (const auto& [e, c] : terms_) {
        Exponents big(total_vars, 0);
        std::copy(e.begin(), e.end(), big.begin() + static_cast<std::ptrdiff_t>(offset));
        out.add_term(std::move(big), c);
    }
    return out;
}

double Polynomial::evaluate(std::span<const double> point) const {
    double acc = 0.0;
    for (const auto& [e, c] : terms_) {
        double prod = c;
        for (std::size_t i = 0; i < vars_; ++i)
            for (int k = 0; k < e[i]; ++k)
                prod *= point[i];
        acc += prod;
    }
    return acc;
}

int Polynomial::degree() const {
    int deg = 0;
    for (const auto& [e, c] : terms_) {
        (void)c;
        int s = 0;
        for (int v : e)
            s += v;
        deg = std::max(deg, s);
    }
    return deg;
}

GaussianFamily GaussianFamily::from_covariance(std::size_t m, std::vector<double> sigma) {
    if (sigma.size() != m * m)
        throw std::invalid_argument("GaussianFamily: covariance size mismatch");
    if (m > ChaosExpansion::kMaxRank)
        throw std::invalid_argument("GaussianFamily: more than 8 base variables");
    Eigen::MatrixXd S(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            S(i, j) = sigma[i * m + j];
            if (std::abs(sigma[i * m + j] - sigma[j * m + i]) >
                1e-12 * std::max(1.0, std::abs(sigma[i * m + j])))
                throw std::invalid_argument("GaussianFamily: covariance not symmetric");
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("GaussianFamily: eigendecomposition failed");
    const double tr = std::max(std::abs(S.trace()), 1e-300);
    std::vector<std::size_t> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double lam = es.eigenvalues()[i];
        if (lam < -1e-10 * tr)
            throw std::invalid_argument("GaussianFamily: covariance not PSD");
        if (lam > 1e-12 * tr)
            keep.push_back(static_cast<std::size_t>(i));
    }
    GaussianFamily fam;
    fam.m = m;
    fam.r = keep.size();
    fam.sigma = std::move(sigma);
    fam.factor.assign(m * fam.r, 0.0);
    for (std::size_t j = 0; j < fam.r; ++j) {
        const double s = std::sqrt(es.eigenvalues()[static_cast<Eigen::Index>(keep[j])]);
        for (std::size_t i = 0; i < m; ++i)
            fam.factor[i * fam.r + j] =
                es.eigenvectors()(static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(keep[j])) * s;
    }
    return fam;
}

std::vector<double> GaussianFamily::coordinates(std::span<const double> x) const {
    Eigen::MatrixXd L(m, r);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < r; ++j)
            L(i, j) = factor[i * r + j];
    Eigen::VectorXd b(m);
    for (std::size_t i = 0; i < m; ++i)
        b[static_cast<Eigen::Index>(i)] = x[i];
    Eigen::VectorXd xi = L.colPivHouseholderQr().solve(b);
    return std::vector<double>(xi.data(), xi.data() + xi.size());
}

double multiset_orderings(const Multiset& m) {
    double fact = 1.0;
    for (std::size_t i = 2; i <= m.size(); ++i)
        fact *= static_cast<double>(i);
    std::size_t i = 0;
    while (i < m.size()) {
        std::size_t j = i;
        double run = 1.0;
        while (j < m.size() && m[j] == m[i]) {
            ++j;
            run *= static_cast<double>(j - i);
        }
        fact /= run;
        i = j;
    }
    return fact;
}

ChaosExpansion ChaosExpansion::constant(std::size_t r, double c) {
    ChaosExpansion e(r);
    if (c != 0.0)
        e.add(0, {}, c);
    return e;
}

ChaosExpansion ChaosExpansion::first_order(std::vector<double> coeffs) {
    ChaosExpansion e(coeffs.size());
    for (std::size_t j = 0; j < coeffs.size(); ++j)
        if (coeffs[j] != 0.0)
            e.add(1, {static_cast<std::uint8_t>(j)}, coeffs[j]);
    return e;
}

ChaosExpansion ChaosExpansion::basis_element(std::size_t r, const Multiset& m, double coeff) {
    ChaosExpansion e(r);
    Multiset s = m;
    std::sort(s.begin(), s.end());
    e.add(static_cast<int>(s.size()), s, coeff / multiset_orderings(s));
    return e;
}

int ChaosExpansion::max_order() const {
    for (int n = static_cast<int>(kernels_.size()); n-- > 0;)
        if (!kernels_[static_cast<std::size_t>(n)].empty())
            return n;
    return 0;
}

const std::map<Multiset, double>& ChaosExpansion::kernel(int order) const {
    static const std::map<Multiset, double> empty;
    if (order < 0 || static_cast<std::size_t>(order) >= kernels_.size())
        return empty;
    return kernels_[static_cast<std::size_t>(order)];
}

void ChaosExpansion::add(int order, const Multiset& m, double coeff) {
    if (order < 0 || order > kMaxOrder)
        throw std::invalid_argument("ChaosExpansion: order outside [0,16]");
    if (static_cast<int>(m.size()) != order)
        throw std::invalid_argument("ChaosExpansion: multiset size must equal the order");
    for (auto v : m)
        if (v >= r_)
            throw std::out_of_range("ChaosExpansion: basis index out of range");
    if (!std::is_sorted(m.begin(), m.end()))
        throw std::invalid_argument("ChaosExpansion: multiset must be sorted");
    if (static_cast<std::size_t>(order) >= kernels_.size())
        kernels_.resize(static_cast<std::size_t>(order) + 1);
    auto& slot = kernels_[static_cast<std::size_t>(order)][m];
    slot += coeff;
    if (slot == 0.0)
        kernels_[static_cast<std::size_t>(order)].erase(m);
}

double multiple_integral_eval(const std::map<Multiset, double>& kernel,
                              std::span<const double> xi) {
    double acc = 0.0;
    for (const auto& [m, c] : kernel) {
        double prod = c * multiset_orderings(m);
        std::size_t i = 0;
        while (i < m.size()) {
            std::size_t j = i;
            while (j < m.size() && m[j] == m[i])
                ++j;
            prod *= hermite(static_cast<int>(j - i), xi[m[i]]);
            i = j;
        }
        acc += prod;
    }
    return acc;
}

double ChaosExpansion::evaluate(std::span<const double> xi) const {
    if (xi.size() < r_)
        throw std::invalid_argument("ChaosExpansion::evaluate: sample too short");
    double acc = 0.0;
    for (const auto& kern : kernels_)
        acc += multiple_integral_eval(kern, xi);
    return acc;
}

double ChaosExpansion::expectation() const {
    const auto& k0 = kernel(0);
    const auto it = k0.find({});
    return it == k0.end() ? 0.0 : it->second;
}

double ChaosExpansion::kernel_norm_squared(int order) const {
    double acc = 0.0;
    for (const auto& [m, c] : kernel(order))
        acc += multiset_orderings(m) * c * c;
    return acc;
}

double ChaosExpansion::second_moment() const {
    double acc = 0.0;
    double fact = 1.0;
    for (int n = 0; n <= max_order(); ++n) {
        if (n > 0)
            fact *= static_cast<double>(n);
        acc += fact * kernel_norm_squared(n);
    }
    return acc;
}

double ChaosExpansion::max_coefficient_deviation(const ChaosExpansion& o) const {
    double dev = 0.0;
    const int top = std::max(max_order(), o.max_order());
    for (int n = 0; n <= top; ++n) {
        const auto& a = kernel(n);
        const auto& b = o.kernel(n);
        for (const auto& [m, c] : a) {
            const auto it = b.find(m);
            dev = std::max(dev, std::abs(c - (it == b.end() ? 0.0 : it->second)));
        }
        for (const auto& [m, c] : b)
            if (a.find(m) == a.end())
                dev = std::max(dev, std::abs(c));
    }
    return dev;
}

void ChaosExpansion::prune(double eps) {
    for (auto& kern : kernels_)
        for (auto it = kern.begin(); it != kern.end();)
            it = (std::abs(it->second) <= eps) ? kern.erase(it) : std::next(it);
}

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

std::size_t count_in(const Multiset& m, std::uint8_t v) {
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), v));
}

} // namespace

ChaosExpansion wick_product(const ChaosExpansion& a, const ChaosExpansion& b) {
    if (a.rank() != b.rank())
        throw std::invalid_argument("wick_product: rank mismatch");
    if (a.max_order() + b.max_order() > ChaosExpansion::kMaxOrder)
        throw std::invalid_argument("wick_product: combined order above 16");
    ChaosExpansion out(a.rank());
    for (int n = 0; n <= a.max_order(); ++n) {
        for (const auto& [ma, ca] : a.kernel(n)) {
            for (int m = 0; m <= b.max_order(); ++m) {
                for (const auto& [mb, cb] : b.kernel(m)) {
                    Multiset merged(ma.size() + mb.size());
                    std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), merged.begin());
                    // symmetrization weight: which copies of each value came
                    // from the left factor
                    double ways = 1.0;
                    std::size_t i = 0;
                    while (i < merged.size()) {
                        std::size_t j = i;
                        while (j < merged.size() && merged[j] == merged[i])
                            ++j;
                        ways *= binom(static_cast<int>(j - i),
                                      static_cast<int>(count_in(ma, merged[i])));
                        i = j;
                    }
                    const double w = ways / binom(n + m, n);
                    out.add(n + m, merged, w * ca * cb);
                }
            }
        }
    }
    out.prune(0.0);
    return out;
}

ChaosExpansion wick_power(const ChaosExpansion& a, int p) {
    if (p < 0)
        throw std::invalid_argument("wick_power: negative power");
    ChaosExpansion out = ChaosExpansion::constant(a.rank(), 1.0);
    for (int i = 0; i < p; ++i)
        out = wick_product(out, a);
    return out;
}

ChaosExpansion exponential_vector(std::vector<double> coeffs, int trunc) {
    if (trunc < 0 || trunc > ChaosExpansion::kMaxOrder)
        throw std::invalid_argument("exponential_vector: truncation outside [0,16]");
    const std::size_t r = coeffs.size();
    ChaosExpansion out(r);
    out.add(0, {}, 1.0);
    // order n kernel: f^{(x) n} / n!; entries are monomials in the coeffs
    std::vector<std::pair<Multiset, double>> level = {{Multiset{}, 1.0}};
    double fact = 1.0;
    for (int n = 1; n <= trunc; ++n) {
        fact *= static_cast<double>(n);
        std::map<Multiset, double> next;
        for (const auto& [m, v] : level)
            for (std::size_t j = 0; j < r; ++j) {
                if (coeffs[j] == 0.0)
                    continue;
                if (!m.empty() && j < m.back())
                    continue; // keep sorted, count each multiset once
                Multiset mm = m;
                mm.push_back(static_cast<std::uint8_t>(j));
                next[mm] = v * coeffs[j]; // product over entries, order-free
            }
        level.assign(next.begin(), next.end());
        for (const auto& [m, v] : level)
            out.add(n, m, v / fact);
    }
    return out;
}

ChaosExpansion polynomial_to_chaos(const GaussianFamily& family, const Polynomial& poly) {
    if (poly.vars() != family.m)
        throw std::invalid_argument("polynomial_to_chaos: variable count mismatch");
    if (poly.degree() > ChaosExpansion::kMaxOrder)
        throw std::invalid_argument("polynomial_to_chaos: degree above 16");

    // substitute X_i = sum_j L_ij xi_j
    Polynomial sub = Polynomial::constant(family.r, 0.0);
    for (const auto& [e, c] : poly.terms()) {
        Polynomial term = Polynomial::constant(family.r, c);
        for (std::size_t i = 0; i < family.m; ++i) {
            if (e[i] == 0)
                continue;
            Polynomial lin(family.r);
            for (std::size_t j = 0; j < family.r; ++j)
                if (family.factor_at(i, j) != 0.0)
                    lin.add_term([&] {
                        Polynomial::Exponents ex(family.r, 0);
                        ex[j] = 1;
                        return ex;
                    }(), family.factor_at(i, j));
            if (lin.terms().empty())
                lin = Polynomial::constant(family.r, 0.0);
            for (int k = 0; k < e[i]; ++k)
                term = term * lin;
        }
        sub = sub + term;
    }

    // monomials of standard normals -> Hermite products:
    // x^n = sum_j n!/(2^j j! (n-2j)!) He_{n-2j}(x)
    ChaosExpansion out(family.r);
    for (const auto& [e, c] : sub.terms()) {
        std::vector<std::pair<Multiset, double>> acc = {{Multiset{}, c}};
        for (std::size_t v = 0; v < family.r; ++v) {
            const int n = e[v];
            if (n == 0)
                continue;
            std::vector<std::pair<int, double>> expand; // (Hermite order, weight)
            for (int j = 0; 2 * j <= n; ++j) {
                double w = 1.0;
                for (int i = n - 2 * j + 1; i <= n; ++i)
                    w *= static_cast<double>(i);
                for (int i = 1; i <= j; ++i)
                    w /= 2.0 * static_cast<double>(i);
                expand.emplace_back(n - 2 * j, w);
            }
            std::vector<std::pair<Multiset, double>> next;
            for (const auto& [m, w0] : acc)
                for (const auto& [he, w] : expand) {
                    Multiset mm = m;
                    for (int i = 0; i < he; ++i)
                        mm.push_back(static_cast<std::uint8_t>(v));
                    next.emplace_back(std::move(mm), w0 * w);
                }
            acc = std::move(next);
        }
        for (auto& [m, w] : acc) {
            std::sort(m.begin(), m.end());
            out.add(static_cast<int>(m.size()), m, w / multiset_orderings(m));
        }
    }
    out.prune(0.0);
    return out;
}

void validate_independence_pattern(std::size_t d, std::span<const double> cov_2d) {
    const std::size_t n = 2 * d;
    if (cov_2d.size() != n * n)
        throw std::invalid_argument("validate_independence_pattern: size mismatch");
    double scale = 0.0;
    for (double v : cov_2d)
        scale = std::max(scale, std::abs(v));
    const double tol = 1e-14 * std::max(scale, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const bool paired = (i < d && j == d + i) || (j < d && i == d + j);
            if (!paired && std::abs(cov_2d[i * n + j]) > tol)
                throw std::invalid_argument(
                    "independence pattern required by the multidimensional Wick correction");
        }
}

namespace {

GaussianFamily pair_family(std::size_t d, std::span<const double> var_x,
                           std::span<const double> var_y, std::span<const double> cov_xy) {
    const std::size_t n = 2 * d;
    std::vector<double> sigma(n * n, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        if (var_x[k] < 0.0 || var_y[k] < 0.0 ||
            cov_xy[k] * cov_xy[k] > var_x[k] * var_y[k] * (1.0 + 1e-12) + 1e-300)
            throw std::invalid_argument("wick correction: covariance block not PSD");
        sigma[k * n + k] = var_x[k];
        sigma[(d + k) * n + d + k] = var_y[k];
        sigma[k * n + d + k] = cov_xy[k];
        sigma[(d + k) * n + k] = cov_xy[k];
    }
    return GaussianFamily::from_covariance(n, std::move(sigma));
}

// Right side of the correction formula as a polynomial in (X_1..X_d, Y_1..Y_d).
Polynomial correction_rhs_poly(const Polynomial& G, std::size_t d, std::span<const double> var_y,
                               std::span<const double> cov_xy, std::span<const int> p) {
    const std::size_t n = 2 * d;
    Polynomial rhs = Polynomial::constant(n, 0.0);

    std::vector<int> l(d, 0), m(d, 0);
    auto rec = [&](auto&& self, std::size_t k) -> void {
        if (k == d) {
            Polynomial term(G.vars());
            term = G;
            double coef = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                term = term.partial(i, l[i]);
                double pk_fact = 1.0;
                for (int v = 2; v <= p[i]; ++v)
                    pk_fact *= v;
                double den = 1.0;
                for (int v = 2; v <= m[i]; ++v)
                    den *= v;
                for (int v = 2; v <= l[i]; ++v)
                    den *= v;
                for (int v = 2; v <= p[i] - 2 * m[i] - l[i]; ++v)
                    den *= v;
                den *= std::pow(2.0, m[i]);
                coef *= (((m[i] + l[i]) % 2 == 0) ? 1.0 : -1.0) * pk_fact / den;
                coef *= std::pow(cov_xy[i], l[i]) * std::pow(var_y[i], m[i]);
            }
            Polynomial big = term.embedded(n, 0).scaled(coef);
            for (std::size_t i = 0; i < d; ++i) {
                const int yp = p[i] - 2 * m[i] - l[i];
                if (yp > 0) {
                    Polynomial yv = Polynomial::variable(n, d + i);
                    for (int v = 0; v < yp; ++v)
                        big = big * yv;
                }
            }
            rhs = rhs + big;
            return;
        }
        for (l[k] = 0; l[k] <= p[k]; ++l[k])
            for (m[k] = 0; l[k] + 2 * m[k] <= p[k]; ++m[k])
                self(self, k + 1);
        l[k] = 0;
        m[k] = 0;
    };
    rec(rec, 0);
    return rhs;
}

WickCorrectionReport correction_report(const Polynomial& G, std::size_t d,
                                       std::span<const double> var_x,
                                       std::span<const double> var_y,
                                       std::span<const double> cov_xy, std::span<const int> p,
                                       std::span<const double> x_val,
                                       std::span<const double> y_val) {
    int total_p = 0;
    for (int v : p)
        total_p += v;
    if (total_p > 8)
        throw std::invalid_argument("wick correction: |p| above 8");

    GaussianFamily fam = pair_family(d, var_x, var_y, cov_xy);

    // left side: chaos(G(X)) wick Y_1^{p_1} ... Y_d^{p_d}
    ChaosExpansion lhs = polynomial_to_chaos(fam, G.embedded(2 * d, 0));
    for (std::size_t k = 0; k < d; ++k) {
        if (p[k] == 0)
            continue;
        std::vector<double> row(fam.r, 0.0);
        for (std::size_t j = 0; j < fam.r; ++j)
            row[j] = fam.factor_at(d + k, j);
        lhs = wick_product(lhs, wick_power(ChaosExpansion::first_order(row), p[k]));
    }

    Polynomial rhs_poly = correction_rhs_poly(G, d, var_y, cov_xy, p);
    ChaosExpansion rhs = polynomial_to_chaos(fam, rhs_poly);

    std::vector<double> sample(2 * d);
    std::copy(x_val.begin(), x_val.end(), sample.begin());
    std::copy(y_val.begin(), y_val.end(), sample.begin() + static_cast<std::ptrdiff_t>(d));
    const std::vector<double> xi = fam.coordinates(sample);

    WickCorrectionReport rep;
    rep.lhs_value = lhs.evaluate(xi);
    rep.rhs_value = rhs_poly.evaluate(sample);
    rep.max_coeff_dev = lhs.max_coefficient_deviation(rhs);
    return rep;
}

} // namespace

WickCorrectionReport wick_correction_1d(const Polynomial& G, double var_x, double var_y,
                                        double cov_xy, int p, double x_val, double y_val) {
    if (G.vars() != 1)
        throw std::invalid_argument("wick_correction_1d: G must be univariate");
    const double vx[] = {var_x}, vy[] = {var_y}, cxy[] = {cov_xy};
    const int pp[] = {p};
    const double xv[] = {x_val}, yv[] = {y_val};
    return correction_report(G, 1, vx, vy, cxy, pp, xv, yv);
}

WickCorrectionReport wick_correction_multi(const Polynomial& G, std::span<const double> var_x,
                                           std::span<const double> var_y,
                                           std::span<const double> cov_xy,
                                           std::span<const int> p, std::span<const double> x_val,
                                           std::span<const double> y_val) {
    const std::size_t d = G.vars();
    if (var_x.size() != d || var_y.size() != d || cov_xy.size() != d || p.size() != d ||
        x_val.size() != d || y_val.size() != d)
        throw std::invalid_argument("wick_correction_multi: arity mismatch");
    return correction_report(G, d, var_x, var_y, cov_xy, p, x_val, y_val);
}

Polynomial to_polynomial(const TestFunction& f) {
    const std::size_t d = f.arity();
    Polynomial out = Polynomial::constant(d, 0.0);
    for (const auto& term : f.terms()) {
        Polynomial prod = Polynomial::constant(d, term.coeff);
        for (std::size_t j = 0; j < d; ++j) {
            const auto& u = term.factors[j];
            if (u.is_constant_one())
                continue;
            if (!u.is_poly())
                throw std::invalid_argument("to_polynomial: non-polynomial factor in '" +
                                            f.id() + "'");
            Polynomial uni(d);
            const auto& c = u.poly_coeffs();
            for (std::size_t k = 0; k < c.size(); ++k) {
                if (c[k] == 0.0)
                    continue;
                Polynomial::Exponents e(d, 0);
                e[j] = static_cast<int>(k);
                uni.add_term(std::move(e), c[k]);
            }
            prod = prod * uni;
        }
        out = out + prod;
    }
    return out;
}

} // namespace gplab

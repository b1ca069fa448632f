#include "gplab/gaussian_model.hpp"

#include "gplab/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gplab {

namespace {

// 8-point Gauss-Legendre nodes/weights on (-1,1).
constexpr double kGlNode[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};

template <typename F> double gl8(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i)
        s += kGlWeight[i] * f(mid + half * kGlNode[i]);
    return s * half;
}

// Composite GL over panels graded toward `toward` with exponent p >= 1.
template <typename F>
double graded_panels(const F& f, double from, double to, double toward, int panels,
                     double grading) {
    if (from == to)
        return 0.0;
    double total = 0.0;
    std::vector<double> edges(panels + 1);
    if (toward <= from) { // singular end at `from`
        for (int j = 0; j <= panels; ++j) {
            const double u = static_cast<double>(j) / panels;
            edges[j] = from + (to - from) * std::pow(u, grading);
        }
    } else if (toward >= to) { // singular end at `to`
        for (int j = 0; j <= panels; ++j) {
            const double u = static_cast<double>(j) / panels;
            edges[j] = to - (to - from) * std::pow(1.0 - u, grading);
        }
    } else {
        throw std::logic_error("graded_panels: split point inside interval");
    }
    for (int j = 0; j < panels; ++j)
        total += gl8(f, edges[j], edges[j + 1]);
    return total;
}

template <typename F> double uniform_panels(const F& f, double a, double b, int panels) {
    double total = 0.0;
    for (int j = 0; j < panels; ++j) {
        const double lo = a + (b - a) * j / static_cast<double>(panels);
        const double hi = a + (b - a) * (j + 1) / static_cast<double>(panels);
        total += gl8(f, lo, hi);
    }
    return total;
}

} // namespace

double GaussianModel::max_variance_on(const Partition& part) const {
    double m = 0.0;
    for (double t : part.points())
        m = std::max(m, variance(t));
    return m;
}

FbmModel::FbmModel(double hurst, double horizon, std::size_t dim)
    : H_(hurst), T_(horizon), d_(dim) {
    if (!(hurst > 0.0) || !(hurst < 1.0))
        throw std::domain_error("FbmModel: Hurst parameter must lie in (0,1)");
    if (!(horizon > 0.0) || dim == 0)
        throw std::invalid_argument("FbmModel: bad horizon or dimension");
}

double fbm_covariance(double s, double t, double hurst) {
    if (!(hurst > 0.0) || !(hurst < 1.0))
        throw std::domain_error("fbm_covariance: Hurst parameter must lie in (0,1)");
    if (s < 0.0 || t < 0.0)
        throw std::domain_error("fbm_covariance: times must be nonnegative");
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

double FbmModel::covariance(double s, double t) const { return fbm_covariance(s, t, H_); }

double FbmModel::variance(double t) const { return std::pow(t, 2.0 * H_); }

double FbmModel::variance_derivative(double t) const {
    return 2.0 * H_ * std::pow(t, 2.0 * H_ - 1.0);
}

double FbmModel::partial_s_covariance(double s, double y) const {
    const double e = 2.0 * H_ - 1.0;
    const double diff = s - y;
    const double sg = (diff > 0.0) ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    return H_ * (std::pow(s, e) - std::pow(std::abs(diff), e) * sg);
}

BumpFunction::BumpFunction(double center, double width, double horizon, double amplitude)
    : c_(center), w_(width), amp_(amplitude) {
    if (!(width > 0.0) || !(center - width >= 0.0) || !(center + width <= horizon))
        throw std::invalid_argument("BumpFunction: support must lie inside (0,T)");
}

double BumpFunction::value(double t) const {
    const double u = (t - c_) / w_;
    if (std::abs(u) >= 1.0)
        return 0.0;
    return amp_ * std::exp(-1.0 / (1.0 - u * u));
}

double BumpFunction::derivative(double t) const {
    const double u = (t - c_) / w_;
    if (std::abs(u) >= 1.0)
        return 0.0;
    const double q = 1.0 - u * u;
    return value(t) * (-2.0 * u / (q * q)) / w_;
}

double BumpFunction::second_derivative(double t) const {
    const double u = (t - c_) / w_;
    if (std::abs(u) >= 1.0)
        return 0.0;
    const double q = 1.0 - u * u;
    const double a = -2.0 * u / (q * q); // (log bump)'
    const double ap = (-2.0 - 8.0 * u * u / q) / (q * q);
    return value(t) * (a * a + ap) / (w_ * w_);
}

namespace {

// Kernel of the operator A. For fBm the s^{2H-1} term integrates to zero
// against beta' (compact support), leaving H |s-y|^{2H-1} sign(s-y); using the
// reduced form avoids the spurious s -> 0 blow-up.
double a_kernel(const GaussianModel& model, double s, double y) {
    if (const auto* fbm = dynamic_cast<const FbmModel*>(&model)) {
        const double e = 2.0 * fbm->hurst() - 1.0;
        const double diff = s - y;
        const double sg = (diff > 0.0) ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        return fbm->hurst() * std::pow(std::abs(diff), e) * sg;
    }
    return -model.partial_s_covariance(s, y);
}

} // namespace

double operator_A(const GaussianModel& model, const BumpFunction& beta, double s,
                  const QuadratureOptions& opts) {
    const double T = model.horizon();
    if (!(s >= 0.0) || !(s <= T))
        throw std::domain_error("operator_A: s must lie in [0,T]");
    const double lo = std::max(0.0, beta.support_lo());
    const double hi = std::min(T, beta.support_hi());
    if (!(hi > lo))
        return 0.0;

    auto integrand = [&](double y) { return a_kernel(model, s, y) * beta.derivative(y); };

    auto evaluate = [&](int panels) {
        double total = 0.0;
        if (s <= lo || s >= hi) {
            total = uniform_panels(integrand, lo, hi, panels);
        } else {
            total += graded_panels(integrand, lo, s, s, panels, opts.grading);
            total += graded_panels(integrand, s, hi, s, panels, opts.grading);
        }
        return total;
    };

    int panels = opts.initial_panels;
    double prev = evaluate(panels);
    for (int k = 0; k < opts.max_doublings; ++k) {
        panels *= 2;
        const double cur = evaluate(panels);
        if (std::abs(cur - prev) <= opts.rtol * std::abs(cur) + opts.atol)
            return cur;
        prev = cur;
    }
    std::ostringstream msg;
    msg << "operator_A: quadrature did not converge (last estimates " << prev << ", "
        << evaluate(panels * 2) << ")";
    throw std::runtime_error(msg.str());
}

double inner_product_indicator_bump(const GaussianModel& model, double a, double b,
                                    const BumpFunction& beta, std::size_t j, std::size_t l,
                                    const QuadratureOptions& opts) {
    if (!(0.0 <= a) || !(a <= b) || !(b <= model.horizon()))
        throw std::domain_error("inner_product_indicator_bump: need 0 <= a < b <= T");
    if (j != l || a == b)
        return 0.0;
    // Middle form of the defining chain: -int (R_{bt} - R_{at}) beta'(t) dt.
    const double lo = std::max(0.0, beta.support_lo());
    const double hi = std::min(model.horizon(), beta.support_hi());
    if (!(hi > lo))
        return 0.0;
    auto integrand = [&](double t) {
        return -(model.covariance(b, t) - model.covariance(a, t)) * beta.derivative(t);
    };
    // R has diagonal kinks at t = a and t = b; split panels there.
    std::vector<double> cuts = {lo, hi};
    if (a > lo && a < hi)
        cuts.push_back(a);
    if (b > lo && b < hi)
        cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    int panels = opts.initial_panels;
    auto evaluate = [&](int m) {
        double total = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
            total += uniform_panels(integrand, cuts[c], cuts[c + 1], m);
        return total;
    };
    double prev = evaluate(panels);
    for (int k = 0; k < opts.max_doublings; ++k) {
        panels *= 2;
        const double cur = evaluate(panels);
        if (std::abs(cur - prev) <= opts.rtol * std::abs(cur) + opts.atol)
            return cur;
        prev = cur;
    }
    throw std::runtime_error("inner_product_indicator_bump: quadrature did not converge");
}

double accumulated_A(const GaussianModel& model, const BumpFunction& beta, double rho,
                     const QuadratureOptions& opts) {
    if (!(0.0 <= rho) || !(rho <= model.horizon()))
        throw std::domain_error("accumulated_A: rho outside [0,T]");
    if (rho == 0.0)
        return 0.0;
    QuadratureOptions inner = opts;
    inner.rtol = std::max(opts.rtol, 1e-9);
    auto f = [&](double s) { return operator_A(model, beta, s, inner); };
    // A beta is bounded but can have kinks at the support edges.
    std::vector<double> cuts = {0.0, rho};
    for (double c : {beta.support_lo(), beta.support_hi()})
        if (c > 0.0 && c < rho)
            cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
        total += uniform_panels(f, cuts[c], cuts[c + 1], 8);
    return total;
}

double bump_h_norm_squared(const GaussianModel& model, const BumpFunction& beta, int panels) {
    const double lo = beta.support_lo(), hi = beta.support_hi();
    auto inner = [&](double u) {
        auto f = [&](double v) { return beta.derivative(v) * model.covariance(u, v); };
        // diagonal kink at v = u
        return graded_panels(f, lo, u, u, panels / 2, 2.0) +
               graded_panels(f, u, hi, u, panels / 2, 2.0);
    };
    auto outer = [&](double u) { return beta.derivative(u) * inner(u); };
    return uniform_panels(outer, lo, hi, panels);
}

double bump_increment_cross_moment(const GaussianModel& model, const BumpFunction& beta,
                                   double a, double b, int panels) {
    const double lo = beta.support_lo(), hi = beta.support_hi();
    std::vector<double> cuts = {lo, hi};
    if (a > lo && a < hi)
        cuts.push_back(a);
    if (b > lo && b < hi)
        cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    auto f = [&](double u) {
        return -(model.covariance(b, u) - model.covariance(a, u)) * beta.derivative(u);
    };
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
        total += uniform_panels(f, cuts[c], cuts[c + 1], panels / 2);
    return total;
}

GridPath::GridPath(Partition p, std::size_t dim)
    : part(std::move(p)), d(dim), values(part.size() * dim, 0.0) {
    if (dim == 0)
        throw std::invalid_argument("GridPath: dimension must be positive");
}

GridPath GridPath::from_function(const Partition& p, std::size_t dim,
                                 const std::function<void(double, std::span<double>)>& fn) {
    GridPath path(p, dim);
    for (std::size_t i = 0; i < p.size(); ++i)
        fn(p[i], std::span<double>(path.at(i), dim));
    return path;
}

void GridPath::increment(std::size_t i, std::size_t j, std::span<double> out) const {
    for (std::size_t k = 0; k < d; ++k)
        out[k] = coord(j, k) - coord(i, k);
}

void GridPath::interpolate(double t, std::span<double> out) const {
    const auto& pts = part.points();
    if (t <= pts.front()) {
        std::copy(at(0), at(0) + d, out.begin());
        return;
    }
    if (t >= pts.back()) {
        std::copy(at(pts.size() - 1), at(pts.size() - 1) + d, out.begin());
        return;
    }
    const auto it = std::upper_bound(pts.begin(), pts.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - pts.begin()) - 1;
    const double w = (t - pts[i]) / (pts[i + 1] - pts[i]);
    for (std::size_t k = 0; k < d; ++k)
        out[k] = (1.0 - w) * coord(i, k) + w * coord(i + 1, k);
}

GridPath GridPath::restrict_stride(std::size_t stride) const {
    GridPath out(part.coarsen(stride), d);
    for (std::size_t i = 0; i < out.part.size(); ++i)
        std::copy(at(i * stride), at(i * stride) + d, out.at(i));
    return out;
}

PathSampler::PathSampler(std::shared_ptr<const GaussianModel> model, Partition part,
                         std::uint64_t seed)
    : model_(std::move(model)), part_(std::move(part)), seed_(seed), np_(part_.size()) {
    const auto& t = part_.points();
    double max_var = 0.0;
    for (double ti : t)
        max_var = std::max(max_var, model_->variance(ti));
    degenerate_.assign(np_, false);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < np_; ++i) {
        if (model_->variance(t[i]) <= 1e-14 * std::max(max_var, 1e-300))
            degenerate_[i] = true;
        else
            active.push_back(i);
    }
    factor_.assign(np_ * np_, 0.0);
    const std::size_t m = active.size();
    if (m == 0)
        return;

    Eigen::MatrixXd cov(m, m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            const double v = model_->covariance(t[active[a]], t[active[b]]);
            cov(a, b) = v;
            cov(b, a) = v;
        }

    Eigen::MatrixXd L;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
        L = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("PathSampler: eigendecomposition failed");
        const double floor = -1e-10 * std::abs(cov.trace());
        Eigen::VectorXd lam = es.eigenvalues();
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            if (lam[i] < floor)
                throw std::runtime_error("PathSampler: covariance not PSD on grid");
            lam[i] = std::max(lam[i], 0.0);
        }
        L = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            factor_[active[a] * np_ + active[b]] = L(static_cast<Eigen::Index>(a),
                                                     static_cast<Eigen::Index>(b));
}

GridPath PathSampler::sample(std::size_t index) const {
    const std::size_t d = model_->dimension();
    GridPath path(part_, d);
    std::vector<double> xi(np_);
    for (std::size_t c = 0; c < d; ++c) {
        StreamRng rng(seed_, static_cast<std::uint64_t>(index) * d + c);
        for (std::size_t i = 0; i < np_; ++i)
            xi[i] = degenerate_[i] ? 0.0 : rng.normal();
        for (std::size_t i = 0; i < np_; ++i) {
            if (degenerate_[i])
                continue;
            double acc = 0.0;
            const double* row = factor_.data() + i * np_;
            for (std::size_t j = 0; j < np_; ++j)
                acc += row[j] * xi[j];
            path.at(i)[c] = acc;
        }
    }
    return path;
}

PathEnsemble sample_ensemble(std::shared_ptr<const GaussianModel> model, const Partition& part,
                             std::size_t n_samples, std::uint64_t seed, unsigned workers) {
    PathSampler sampler(model, part, seed);
    PathEnsemble ens{model, part, n_samples, seed, {}};
    ens.paths.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        ens.paths.emplace_back(part, model->dimension());
    parallel_for(n_samples, workers,
                 [&](std::size_t i) { ens.paths[i] = sampler.sample(i); });
    return ens;
}

} // namespace gplab

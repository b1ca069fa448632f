#include "gplab/skorohod.hpp"

#include "gplab/rng.hpp"
#include "gplab/strato.hpp"
#include "gplab/wick.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gplab {

namespace {

struct WickTerm {
    std::vector<int> q;      // derivative orders per coordinate
    std::vector<int> u;      // deltaR powers per coordinate
    std::vector<int> ypow;   // q - 2u
    double coeff = 1.0;      // prod (-1)^u / (u! (q-2u)!)
    int u_total = 0;
    enum class Bucket { Theta1, Theta2, Theta3, ThetaTilde } bucket = Bucket::Theta1;
    std::size_t theta3_coord = 0;
    std::size_t q_id = 0; // index into the distinct-q list
};

struct WickPlan {
    std::vector<std::vector<int>> distinct_q;
    std::vector<WickTerm> terms;
};

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i)
        r *= i;
    return r;
}

WickPlan build_wick_plan(std::size_t d, int order) {
    WickPlan plan;
    std::vector<int> q(d, 0);
    std::vector<int> u(d, 0);

    auto push_term = [&](int q_total, int u_total) {
        WickTerm term;
        term.q = q;
        term.u = u;
        term.u_total = u_total;
        term.ypow.resize(d);
        term.coeff = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            term.ypow[k] = q[k] - 2 * u[k];
            term.coeff *= ((u[k] % 2 == 0) ? 1.0 : -1.0) /
                          (factorial(u[k]) * factorial(term.ypow[k]));
        }
        if (u_total == 0) {
            term.bucket = (q_total <= order) ? WickTerm::Bucket::Theta1
                                             : WickTerm::Bucket::Theta2;
        } else {
            std::size_t hits = 0, coord = 0;
            for (std::size_t k = 0; k < d; ++k)
                if (u[k] > 0) {
                    ++hits;
                    coord = k;
                }
            if (hits == 1 && u[coord] == 1 && q[coord] == 2 && q_total == 2) {
                term.bucket = WickTerm::Bucket::Theta3;
                term.theta3_coord = coord;
            } else {
                term.bucket = WickTerm::Bucket::ThetaTilde;
            }
        }
        std::size_t q_id = plan.distinct_q.size();
        for (std::size_t i = 0; i < plan.distinct_q.size(); ++i)
            if (plan.distinct_q[i] == q) {
                q_id = i;
                break;
            }
        if (q_id == plan.distinct_q.size())
            plan.distinct_q.push_back(q);
        term.q_id = q_id;
        plan.terms.push_back(std::move(term));
    };

    auto rec_u = [&](auto&& self, std::size_t k, int q_total, int u_total) -> void {
        if (k == d) {
            // keep only the pairs the order-N Wick expansion generates
            if (q_total - u_total <= order)
                push_term(q_total, u_total);
            return;
        }
        for (u[k] = 0; 2 * u[k] <= q[k]; ++u[k])
            self(self, k + 1, q_total, u_total + u[k]);
        u[k] = 0;
    };

    auto rec_q = [&](auto&& self, std::size_t k, int q_total) -> void {
        if (k == d) {
            if (q_total >= 1)
                rec_u(rec_u, 0, q_total, 0);
            return;
        }
        for (q[k] = 0; q_total + q[k] <= 2 * order; ++q[k])
            self(self, k + 1, q_total + q[k]);
        q[k] = 0;
    };
    rec_q(rec_q, 0, 0);
    return plan;
}

} // namespace

WickSumBreakdown riemann_wick_sum(const TestFunction& f, const GridPath& path,
                                  const GaussianModel& model, int order) {
    if (order < 1)
        throw std::invalid_argument("riemann_wick_sum: order must be >= 1");
    if (f.max_order() < 2 * order)
        throw std::invalid_argument("riemann_wick_sum: need derivatives up to 2N");
    if (f.arity() != path.d)
        throw std::invalid_argument("riemann_wick_sum: arity mismatch");
    check_growth_certificate(f, model.max_variance_on(path.part), path.d);

    const std::size_t d = path.d;
    const WickPlan plan = build_wick_plan(d, order);

    WickSumBreakdown out;
    out.theta3.assign(d, 0.0);
    std::vector<double> dx(d);
    std::vector<double> dq(plan.distinct_q.size());
    for (std::size_t i = 0; i < path.part.cells(); ++i) {
        std::span<const double> x(path.at(i), d);
        path.increment(i, i + 1, dx);
        const double half_dr =
            0.5 * model.variance_increment(path.part[i], path.part[i + 1]);
        for (std::size_t qi = 0; qi < plan.distinct_q.size(); ++qi)
            dq[qi] = f.partial(plan.distinct_q[qi], x);
        for (const auto& term : plan.terms) {
            double v = term.coeff * dq[term.q_id];
            for (int p = 0; p < term.u_total; ++p)
                v *= half_dr;
            for (std::size_t k = 0; k < d; ++k)
                for (int p = 0; p < term.ypow[k]; ++p)
                    v *= dx[k];
            switch (term.bucket) {
            case WickTerm::Bucket::Theta1:
                out.theta1 += v;
                break;
            case WickTerm::Bucket::Theta2:
                out.theta2 += v;
                break;
            case WickTerm::Bucket::Theta3:
                out.theta3[term.theta3_coord] += v;
                break;
            case WickTerm::Bucket::ThetaTilde:
                out.theta_tilde += v;
                break;
            }
        }
    }
    out.total = out.theta1 + out.theta2 + out.theta3_total() + out.theta_tilde;
    return out;
}

namespace {

std::size_t grid_index_of(const Partition& part, double t, const char* what) {
    const auto& pts = part.points();
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (std::abs(pts[i] - t) <= 1e-12 * std::max(1.0, std::abs(t)))
            return i;
    throw std::invalid_argument(std::string(what) + " must be a grid point");
}

} // namespace

double ito_skorohod_rhs(const TestFunction& f, const GridPath& path, const GaussianModel& model,
                        double s, double t, int subdiv) {
    if (f.arity() != path.d)
        throw std::invalid_argument("ito_skorohod_rhs: arity mismatch");
    check_growth_certificate(f, model.max_variance_on(path.part), path.d);
    const std::size_t is = grid_index_of(path.part, s, "ito_skorohod_rhs: s");
    const std::size_t it = grid_index_of(path.part, t, "ito_skorohod_rhs: t");
    if (is >= it)
        throw std::invalid_argument("ito_skorohod_rhs: need s < t");

    const std::size_t d = path.d;
    std::vector<double> xbuf(d);
    double correction = 0.0;
    for (std::size_t i = is; i < it; ++i) {
        const double a = path.part[i], b = path.part[i + 1];
        double prev_t = a;
        path.interpolate(prev_t, xbuf);
        double prev_g = f.laplacian(xbuf);
        for (int k = 1; k <= subdiv; ++k) {
            const double cur_t = a + (b - a) * k / static_cast<double>(subdiv);
            path.interpolate(cur_t, xbuf);
            const double cur_g = f.laplacian(xbuf);
            correction += 0.5 * (prev_g + cur_g) * model.variance_increment(prev_t, cur_t);
            prev_t = cur_t;
            prev_g = cur_g;
        }
    }
    std::span<const double> xs(path.at(is), d);
    std::span<const double> xt(path.at(it), d);
    return f(xt) - f(xs) - 0.5 * correction;
}

double first_order_wick_sum(const TestFunction& f, const GridPath& path,
                            const GaussianModel& model) {
    if (path.d != 1 || f.arity() != 1)
        throw std::invalid_argument("first_order_wick_sum: one-dimensional only");
    const std::vector<int> d1{1}, d2{2};
    double acc = 0.0;
    for (std::size_t i = 0; i < path.part.cells(); ++i) {
        const double x = path.coord(i, 0);
        const double dx = path.coord(i + 1, 0) - x;
        const double exy = model.covariance(path.part[i], path.part[i + 1]) -
                           model.covariance(path.part[i], path.part[i]);
        std::span<const double> pt(&x, 1);
        acc += f.partial(d1, pt) * dx - f.partial(d2, pt) * exy;
    }
    return acc;
}

SkorohodConvergence skorohod_convergence(const TestFunction& f, const PathSampler& sampler,
                                         std::size_t n_samples, int levels, int order,
                                         unsigned workers) {
    const Partition& fine = sampler.partition();
    if (fine.cells() % (std::size_t{1} << levels) != 0)
        throw std::invalid_argument(
            "skorohod_convergence: finest cell count must be divisible by 2^levels");
    // fail on the calling thread, not inside the worker pool
    if (f.max_order() < 2 * order || f.arity() != sampler.model().dimension())
        throw std::invalid_argument("skorohod_convergence: derivative order or arity shortfall");
    check_growth_certificate(f, sampler.model().max_variance_on(fine),
                             sampler.model().dimension());

    SkorohodConvergence out;
    out.mesh.resize(levels + 1);
    for (int k = 0; k <= levels; ++k)
        out.mesh[k] = fine.coarsen(std::size_t{1} << (levels - k)).mesh();

    out.rows.assign(n_samples * static_cast<std::size_t>(levels + 1), {});
    parallel_for(n_samples, workers, [&](std::size_t p) {
        const GridPath path = sampler.sample(p);
        const double rhs = ito_skorohod_rhs(f, path, sampler.model(), fine.t0(),
                                            fine.horizon());
        for (int k = 0; k <= levels; ++k) {
            const GridPath coarse = path.restrict_stride(std::size_t{1} << (levels - k));
            SkorohodConvergenceRow row;
            row.path_id = p;
            row.level = k;
            row.breakdown = riemann_wick_sum(f, coarse, sampler.model(), order);
            row.rhs = rhs;
            row.abs_err = std::abs(row.breakdown.total - rhs);
            out.rows[p * static_cast<std::size_t>(levels + 1) + static_cast<std::size_t>(k)] =
                std::move(row);
        }
    });

    out.median_abs_err.resize(levels + 1);
    std::vector<double> errs(n_samples);
    for (int k = 0; k <= levels; ++k) {
        for (std::size_t p = 0; p < n_samples; ++p)
            errs[p] = out.rows[p * static_cast<std::size_t>(levels + 1) +
                               static_cast<std::size_t>(k)].abs_err;
        std::nth_element(errs.begin(), errs.begin() + static_cast<std::ptrdiff_t>(n_samples / 2),
                         errs.end());
        out.median_abs_err[k] = errs[n_samples / 2];
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int k = 0; k <= levels; ++k) {
        if (out.median_abs_err[k] <= 0.0)
            continue;
        const double lx = std::log(out.mesh[k]);
        const double ly = std::log(out.median_abs_err[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    const double den = cnt * sxx - sx * sx;
    out.observed_order = (cnt >= 2 && den != 0.0) ? (cnt * sxy - sx * sy) / den : 0.0;
    return out;
}

namespace {

// -int <x, phi'> along the piecewise-linear path, trapezoid per coordinate
// over at least `nodes` points of each bump support.
double xphi_quadrature(const GridPath& path, const std::vector<BumpFunction>& phi, int nodes) {
    double acc = 0.0;
    std::vector<double> xbuf(path.d);
    for (std::size_t j = 0; j < phi.size(); ++j) {
        const double lo = phi[j].support_lo(), hi = phi[j].support_hi();
        const int m = std::max<int>(nodes, static_cast<int>(2 * path.part.cells()));
        double prev_t = lo;
        path.interpolate(prev_t, xbuf);
        double prev_v = xbuf[j] * phi[j].derivative(prev_t);
        double integral = 0.0;
        for (int k = 1; k <= m; ++k) {
            const double cur_t = lo + (hi - lo) * k / static_cast<double>(m);
            path.interpolate(cur_t, xbuf);
            const double cur_v = xbuf[j] * phi[j].derivative(cur_t);
            integral += 0.5 * (prev_v + cur_v) * (cur_t - prev_t);
            prev_t = cur_t;
            prev_v = cur_v;
        }
        acc += integral;
    }
    return -acc;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& v) {
    MeanSe out;
    const double n = static_cast<double>(v.size());
    out.mean = tree_sum(v) / n;
    if (v.size() < 2)
        return out;
    double ss = 0.0;
    for (double x : v) {
        const double c = x - out.mean;
        ss += c * c;
    }
    out.se = std::sqrt(ss / (n * (n - 1.0)));
    return out;
}

} // namespace

DualityReport duality_check(const TestFunction& f, const std::vector<BumpFunction>& phi, int n,
                            const PathSampler& sampler, std::size_t n_samples, double s, double t,
                            unsigned workers, int xphi_nodes) {
    const GaussianModel& model = sampler.model();
    const std::size_t d = model.dimension();
    if (phi.size() != d || f.arity() != d)
        throw std::invalid_argument("duality_check: need one bump per coordinate");
    if (n < 0)
        throw std::invalid_argument("duality_check: Hermite order must be >= 0");

    DualityReport rep;
    rep.n_samples = n_samples;
    for (const auto& b : phi)
        rep.phi_norm_sq += bump_h_norm_squared(model, b);
    if (rep.phi_norm_sq <= 1e-14) {
        rep.degenerate = true;
        return rep;
    }

    const Partition& part = sampler.partition();
    const std::size_t is = grid_index_of(part, s, "duality_check: s");
    const std::size_t it = grid_index_of(part, t, "duality_check: t");
    if (is >= it)
        throw std::invalid_argument("duality_check: need s < t");
    check_growth_certificate(f, model.max_variance_on(part), d);

    // A phi per coordinate at every quadrature node in [s,t]
    std::vector<std::vector<double>> a_nodes(d, std::vector<double>(it - is + 1, 0.0));
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = is; i <= it; ++i)
            a_nodes[j][i - is] = operator_A(model, phi[j], part[i]);

    const double nfact = factorial(n);
    const double nm1fact = (n >= 1) ? factorial(n - 1) : 1.0;
    const double var = rep.phi_norm_sq;

    std::vector<double> lhs(n_samples), rhs(n_samples), diff(n_samples);
    parallel_for(n_samples, workers, [&](std::size_t p) {
        const GridPath path = sampler.sample(p);
        const double delta = ito_skorohod_rhs(f, path, model, s, t);
        const double y = xphi_quadrature(path, phi, xphi_nodes);
        const double hn = hermite_scaled(n, y, var) / nfact;
        lhs[p] = delta * hn;

        double q = 0.0;
        if (n >= 1) {
            std::vector<double> grad(d);
            std::vector<double> prev(d), cur(d);
            f.gradient(std::span<const double>(path.at(is), d), prev);
            for (std::size_t i = is; i < it; ++i) {
                f.gradient(std::span<const double>(path.at(i + 1), d), cur);
                const double w = 0.5 * (part[i + 1] - part[i]);
                for (std::size_t j = 0; j < d; ++j)
                    q += w * (prev[j] * a_nodes[j][i - is] + cur[j] * a_nodes[j][i + 1 - is]);
                prev = cur;
            }
            const double hnm1 = hermite_scaled(n - 1, y, var) / nm1fact;
            q *= hnm1;
        }
        rhs[p] = q;
        diff[p] = lhs[p] - rhs[p];
    });

    const MeanSe ml = mean_and_se(lhs);
    const MeanSe mr = mean_and_se(rhs);
    const MeanSe md = mean_and_se(diff);
    rep.lhs = ml.mean;
    rep.lhs_se = ml.se;
    rep.rhs = mr.mean;
    rep.rhs_se = mr.se;
    rep.z = (md.se > 0.0) ? md.mean / md.se : 0.0;
    return rep;
}

double isserlis_variance_v2(const GaussianModel& model, const Partition& part) {
    const std::size_t cells = part.cells();
    double acc = 0.0;
    for (std::size_t j = 0; j < cells; ++j)
        for (std::size_t k = 0; k < cells; ++k) {
            const double c = model.covariance(part[j + 1], part[k + 1]) -
                             model.covariance(part[j + 1], part[k]) -
                             model.covariance(part[j], part[k + 1]) +
                             model.covariance(part[j], part[k]);
            acc += 2.0 * c * c;
        }
    return acc;
}

WeightedSumDiagnostics weighted_sum_diagnostics(const TestFunction& g, const TestFunction& f,
                                                const PathSampler& sampler,
                                                std::size_t n_samples, int levels,
                                                unsigned workers) {
    const GaussianModel& model = sampler.model();
    if (model.dimension() != 1 || g.arity() != 1 || f.arity() != 1)
        throw std::invalid_argument("weighted_sum_diagnostics: one-dimensional fBm only");
    const auto* fbm = dynamic_cast<const FbmModel*>(&model);
    if (fbm == nullptr)
        throw std::invalid_argument("weighted_sum_diagnostics: needs an fBm model");
    const double H = fbm->hurst();
    check_growth_certificate(g, model.max_variance_on(sampler.partition()), 1);
    check_growth_certificate(f, model.max_variance_on(sampler.partition()), 1);
    if (f.max_order() < 3)
        throw std::invalid_argument("weighted_sum_diagnostics: f needs three derivatives");

    const Partition& fine = sampler.partition();
    if (fine.cells() % (std::size_t{1} << levels) != 0)
        throw std::invalid_argument(
            "weighted_sum_diagnostics: finest cell count must be divisible by 2^levels");

    WeightedSumDiagnostics out;
    out.hurst = H;

    const std::size_t nlev = static_cast<std::size_t>(levels + 1);
    std::vector<std::vector<double>> v2_one(nlev, std::vector<double>(n_samples));
    std::vector<std::vector<double>> v3_g(nlev, std::vector<double>(n_samples));
    std::vector<std::vector<double>> split_res(nlev, std::vector<double>(n_samples));
    std::vector<double> ref_v3(n_samples);

    const std::vector<int> d1{1}, d2{2}, d3{3};
    parallel_for(n_samples, workers, [&](std::size_t p) {
        const GridPath path = sampler.sample(p);
        // pathwise -(3/2) int g'(B_u) du on the finest grid (trapezoid)
        {
            double acc = 0.0;
            for (std::size_t i = 0; i < fine.cells(); ++i) {
                const double a = g.partial(d1, std::span<const double>(path.at(i), 1));
                const double b = g.partial(d1, std::span<const double>(path.at(i + 1), 1));
                acc += 0.5 * (a + b) * (fine[i + 1] - fine[i]);
            }
            ref_v3[p] = -1.5 * acc;
        }
        for (int k = 0; k <= levels; ++k) {
            const GridPath coarse = path.restrict_stride(std::size_t{1} << (levels - k));
            const Partition& part = coarse.part;
            double v2 = 0.0, v3 = 0.0;
            double strato3 = 0.0, var_term = 0.0, v2f = 0.0, v3f = 0.0;
            for (std::size_t i = 0; i < part.cells(); ++i) {
                const double x = coarse.coord(i, 0);
                const double dx = coarse.coord(i + 1, 0) - x;
                const double cell_var = model.variance(part[i + 1]) + model.variance(part[i]) -
                                        2.0 * model.covariance(part[i], part[i + 1]);
                const double dR = model.variance_increment(part[i], part[i + 1]);
                std::span<const double> pt(&x, 1);
                v2 += dx * dx - cell_var; // unit weight, for the scaling report
                v3 += g(pt) * dx * dx * dx;

                const double f1 = f.partial(d1, pt);
                const double f2 = f.partial(d2, pt);
                const double f3 = f.partial(d3, pt);
                strato3 += f1 * dx + 0.5 * f2 * dx * dx + f3 * dx * dx * dx / 6.0;
                var_term += f2 * dR;
                v2f += f2 * (dx * dx - cell_var);
                v3f += f3 * dx * dx * dx;
            }
            v2_one[static_cast<std::size_t>(k)][p] = v2;
            v3_g[static_cast<std::size_t>(k)][p] = v3;
            const double assembled = strato3 - 0.5 * var_term - 0.5 * v2f - v3f / 6.0;
            const double direct = first_order_wick_sum(f, coarse, model);
            split_res[static_cast<std::size_t>(k)][p] = std::abs(direct - assembled);
        }
    });

    const MeanSe ref = mean_and_se(ref_v3);
    for (int k = 0; k <= levels; ++k) {
        WeightedLevelDiagnostics lev;
        lev.level = k;
        const Partition part = fine.coarsen(std::size_t{1} << (levels - k));
        lev.cells = part.cells();
        const auto& v2 = v2_one[static_cast<std::size_t>(k)];
        const MeanSe m2 = mean_and_se(v2);
        lev.mean_v2_one = m2.mean;
        lev.se_v2_one = m2.se;
        lev.z_v2_one = (m2.se > 0.0) ? m2.mean / m2.se : 0.0;
        double var = 0.0;
        for (double v : v2) {
            const double c = v - m2.mean;
            var += c * c;
        }
        var /= std::max<std::size_t>(n_samples - 1, 1);
        lev.var_v2_one = var;
        const double ncells = static_cast<double>(lev.cells);
        lev.var_v2_one_scaled = std::pow(ncells, 4.0 * H - 1.0) * var;
        lev.isserlis_var_v2_one = isserlis_variance_v2(model, part);
        const MeanSe m3 = mean_and_se(v3_g[static_cast<std::size_t>(k)]);
        lev.mean_v3_scaled = std::pow(ncells, 4.0 * H - 1.0) * m3.mean;
        lev.ref_v3 = ref.mean;
        double worst = 0.0;
        for (double r : split_res[static_cast<std::size_t>(k)])
            worst = std::max(worst, r);
        lev.max_split_residual = worst;
        out.levels.push_back(lev);
    }
    return out;
}

} // namespace gplab

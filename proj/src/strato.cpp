#include "gplab/strato.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gplab {

namespace {

std::size_t ipow(std::size_t base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i)
        r *= base;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i)
        r *= i;
    return r;
}

// Tuples (i_1..i_n) in d^n as per-coordinate derivative orders, flat order.
std::vector<std::vector<int>> tuple_orders(std::size_t d, int n) {
    const std::size_t count = ipow(d, n);
    std::vector<std::vector<int>> out(count, std::vector<int>(d, 0));
    for (std::size_t flat = 0; flat < count; ++flat) {
        std::size_t rest = flat;
        for (int p = 0; p < n; ++p) {
            out[flat][rest % d] += 1;
            rest /= d;
        }
    }
    return out;
}

// <d^n f(x), v^{(x) n}> = sum over tuples of the symmetric derivative times
// the product of increments.
double contract_power(const TestFunction& f, const std::vector<std::vector<int>>& orders,
                      std::span<const double> point, std::span<const double> v) {
    double acc = 0.0;
    const std::size_t d = v.size();
    for (std::size_t flat = 0; flat < orders.size(); ++flat) {
        double prod = 1.0;
        std::size_t rest = flat;
        const int n = [&] {
            int s = 0;
            for (int o : orders[flat])
                s += o;
            return s;
        }();
        for (int p = 0; p < n; ++p) {
            prod *= v[rest % d];
            rest /= d;
        }
        if (prod != 0.0)
            acc += f.partial(orders[flat], point) * prod;
    }
    return acc;
}

} // namespace

ControlledDecomposition controlled_decomposition(const TestFunction& f, const GridPath& path,
                                                 int order) {
    if (order < 1)
        throw std::invalid_argument("controlled_decomposition: order must be >= 1");
    if (f.max_order() < order)
        throw std::invalid_argument("controlled_decomposition: insufficient derivative order");
    if (f.arity() != path.d)
        throw std::invalid_argument("controlled_decomposition: arity mismatch");

    const std::size_t d = path.d;
    const std::size_t np = path.part.size();
    const std::size_t cells = path.part.cells();

    ControlledDecomposition out;
    out.d = d;
    out.order = order;

    std::vector<std::vector<std::vector<int>>> orders_by_level(order + 1);
    for (int k = 1; k <= order; ++k)
        orders_by_level[k] = tuple_orders(d, k);

    out.zeta.resize(std::max(order - 1, 0));
    for (int k = 1; k <= order - 1; ++k) {
        auto& z = out.zeta[k - 1];
        z.assign(np * ipow(d, k), 0.0);
        for (std::size_t i = 0; i < np; ++i) {
            std::span<const double> x(path.at(i), d);
            for (std::size_t flat = 0; flat < orders_by_level[k].size(); ++flat)
                z[i * ipow(d, k) + flat] = f.partial(orders_by_level[k][flat], x);
        }
    }

    out.rem.resize(order);
    std::vector<double> dx(d);
    for (int k = 0; k < order; ++k) {
        auto& r = out.rem[static_cast<std::size_t>(k)];
        const std::size_t sz = ipow(d, k);
        r.assign(cells * sz, 0.0);
        for (std::size_t i = 0; i < cells; ++i) {
            std::span<const double> xs(path.at(i), d);
            std::span<const double> xt(path.at(i + 1), d);
            path.increment(i, i + 1, dx);
            for (std::size_t flat = 0; flat < sz; ++flat) {
                std::vector<int> base(d, 0);
                std::size_t rest = flat;
                for (int p = 0; p < k; ++p) {
                    base[rest % d] += 1;
                    rest /= d;
                }
                double val = f.partial(base, xt) - f.partial(base, xs);
                // subtract the Taylor cone up to total order N-1
                for (int p = 1; p <= order - k - 1; ++p) {
                    double taylor = 0.0;
                    for (const auto& extra : orders_by_level[p]) {
                        std::vector<int> full = base;
                        double prod = 1.0;
                        for (std::size_t j = 0; j < d; ++j) {
                            full[j] += extra[j];
                            for (int c = 0; c < extra[j]; ++c)
                                prod *= dx[j];
                        }
                        taylor += f.partial(full, xs) * prod;
                    }
                    val -= taylor / factorial(p);
                }
                r[i * sz + flat] = val;
            }
        }
    }
    return out;
}

StratoVariant strato_variant_from_string(const std::string& s) {
    if (s == "levels")
        return StratoVariant::Levels;
    if (s == "powers")
        return StratoVariant::Powers;
    throw std::invalid_argument("unknown strato variant '" + s + "'");
}

double strato_sum(const TestFunction& f, const GridPath& path, const RoughLift& lift,
                  int order, StratoVariant variant) {
    if (order < 1)
        throw std::invalid_argument("strato_sum: order must be >= 1");
    if (f.max_order() < order)
        throw std::invalid_argument("strato_sum: insufficient derivative order");
    if (variant == StratoVariant::Levels && lift.levels() < order)
        throw std::invalid_argument("strato_sum: lift level below requested order");

    const std::size_t d = path.d;
    const std::size_t cells = path.part.cells();
    std::vector<std::vector<std::vector<int>>> orders_by_level(order + 1);
    for (int n = 1; n <= order; ++n)
        orders_by_level[n] = tuple_orders(d, n);

    std::vector<double> dx(d);
    double total = 0.0;
    for (std::size_t q = 0; q < cells; ++q) {
        std::span<const double> x(path.at(q), d);
        if (variant == StratoVariant::Powers) {
            path.increment(q, q + 1, dx);
            for (int n = 1; n <= order; ++n)
                total += contract_power(f, orders_by_level[n], x, dx) / factorial(n);
        } else {
            for (int n = 1; n <= order; ++n) {
                const double* xn = lift.tensor(n, q, q + 1);
                const auto& ords = orders_by_level[n];
                for (std::size_t flat = 0; flat < ords.size(); ++flat)
                    if (xn[flat] != 0.0)
                        total += f.partial(ords[flat], x) * xn[flat];
            }
        }
    }
    return total;
}

ConvergenceTable change_of_variable_residual(const TestFunction& f, const GridPath& finest,
                                             int levels, int order, StratoVariant variant) {
    if (levels < 1)
        throw std::invalid_argument("change_of_variable_residual: need at least one level");
    if (finest.part.cells() % (std::size_t{1} << levels) != 0)
        throw std::invalid_argument(
            "change_of_variable_residual: finest cell count must be divisible by 2^levels");

    const std::size_t d = finest.d;
    std::span<const double> x0(finest.at(0), d);
    std::span<const double> xT(finest.at(finest.part.size() - 1), d);
    const double ref = f(xT) - f(x0);

    ConvergenceTable table;
    for (int k = 0; k <= levels; ++k) {
        const std::size_t stride = std::size_t{1} << (levels - k);
        GridPath p = finest.restrict_stride(stride);
        RoughLift lift = lift_piecewise_linear(
            p, variant == StratoVariant::Levels ? order : 1, PairMode::Adjacent);
        const double value = strato_sum(f, p, lift, order, variant);
        table.rows.push_back({k, p.part.mesh(), value, ref, std::abs(value - ref)});
    }
    table.extrapolated = ref;

    const double scale = std::max(std::abs(ref), 1.0);
    table.exact = true;
    for (const auto& row : table.rows)
        if (row.abs_err > 1e-13 * scale)
            table.exact = false;
    if (table.exact) {
        table.observed_order = std::numeric_limits<double>::infinity();
        return table;
    }
    std::vector<double> lx, ly;
    const std::size_t L = table.rows.size();
    const std::size_t tail = (L + 1) / 2;
    for (std::size_t i = L - tail; i < L; ++i)
        if (table.rows[i].abs_err > 0.0) {
            lx.push_back(std::log(table.rows[i].mesh));
            ly.push_back(std::log(table.rows[i].abs_err));
        }
    if (lx.size() >= 2) {
        const double n = static_cast<double>(lx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        const double den = n * sxx - sx * sx;
        table.observed_order = den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
    } else {
        table.observed_order = std::numeric_limits<double>::infinity();
    }
    return table;
}

ControlledIntegrand gradient_integrand(const TestFunction& f, const GridPath& path, int order) {
    if (f.max_order() < order)
        throw std::invalid_argument("gradient_integrand: insufficient derivative order");
    const std::size_t d = path.d;
    const std::size_t np = path.part.size();
    ControlledIntegrand out;
    out.d = d;
    out.m.assign(np * d, 0.0);
    for (std::size_t i = 0; i < np; ++i)
        f.gradient(std::span<const double>(path.at(i), d), std::span<double>(out.m.data() + i * d, d));
    out.mu.resize(std::max(order - 1, 0));
    for (int k = 1; k <= order - 1; ++k) {
        const auto ords = tuple_orders(d, k + 1);
        auto& mu = out.mu[k - 1];
        mu.assign(np * ords.size(), 0.0);
        for (std::size_t i = 0; i < np; ++i) {
            std::span<const double> x(path.at(i), d);
            for (std::size_t flat = 0; flat < ords.size(); ++flat)
                mu[i * ords.size() + flat] = f.partial(ords[flat], x);
        }
    }
    return out;
}

GridFunction2 integrate_controlled(const ControlledIntegrand& integrand, const RoughLift& lift) {
    const std::size_t d = integrand.d;
    if (d != lift.dim())
        throw std::invalid_argument("integrate_controlled: dimension mismatch");
    if (static_cast<int>(integrand.mu.size()) + 1 > lift.levels())
        throw std::invalid_argument("integrate_controlled: lift level below coefficient stack");
    const Partition& part = lift.partition();
    const std::size_t cells = part.cells();

    // per-cell contributions, then prefix sums: the pair sums telescope
    std::vector<double> cell(cells, 0.0);
    for (std::size_t q = 0; q < cells; ++q) {
        const double* x1 = lift.tensor(1, q, q + 1);
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c)
            acc += integrand.m[q * d + c] * x1[c];
        for (std::size_t k = 1; k <= integrand.mu.size(); ++k) {
            const std::size_t sz = lift.tensor_size(static_cast<int>(k) + 1);
            const double* xk = lift.tensor(static_cast<int>(k) + 1, q, q + 1);
            const double* mu = integrand.mu[k - 1].data() + q * sz;
            for (std::size_t p = 0; p < sz; ++p)
                acc += mu[p] * xk[p];
        }
        cell[q] = acc;
    }
    std::vector<double> prefix(cells + 1, 0.0);
    for (std::size_t q = 0; q < cells; ++q)
        prefix[q + 1] = prefix[q] + cell[q];

    GridFunction2 out(part, 1);
    for (std::size_t i = 0; i < part.size(); ++i)
        for (std::size_t j = i + 1; j < part.size(); ++j)
            out.at(i, j)[0] = prefix[j] - prefix[i];
    return out;
}

} // namespace gplab

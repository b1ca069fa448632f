#include "gplab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gplab {

Partition::Partition(std::vector<double> points) : pts_(std::move(points)) {
    if (pts_.size() < 2)
        throw std::invalid_argument("Partition: need at least two points");
    mesh_ = 0.0;
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
        const double gap = pts_[i + 1] - pts_[i];
        if (!(gap > 0.0))
            throw std::invalid_argument("Partition: points must be strictly increasing");
        mesh_ = std::max(mesh_, gap);
    }
}

Partition Partition::uniform(double t0, double t1, std::size_t cells) {
    if (cells == 0 || !(t1 > t0))
        throw std::invalid_argument("Partition::uniform: empty interval");
    std::vector<double> p(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
        p[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(cells);
    p.back() = t1;
    return Partition(std::move(p));
}

Partition Partition::refine_dyadic(int k) const {
    if (k < 0)
        throw std::invalid_argument("refine_dyadic: negative level");
    const std::size_t split = std::size_t{1} << k;
    std::vector<double> p;
    p.reserve(cells() * split + 1);
    for (std::size_t i = 0; i < cells(); ++i) {
        for (std::size_t j = 0; j < split; ++j)
            p.push_back(pts_[i] + (pts_[i + 1] - pts_[i]) * static_cast<double>(j) /
                                      static_cast<double>(split));
    }
    p.push_back(pts_.back());
    return Partition(std::move(p));
}

Partition Partition::coarsen(std::size_t stride) const {
    if (stride == 0 || cells() % stride != 0)
        throw std::invalid_argument("coarsen: stride must divide the cell count");
    std::vector<double> p;
    p.reserve(cells() / stride + 1);
    for (std::size_t i = 0; i < pts_.size(); i += stride)
        p.push_back(pts_[i]);
    return Partition(std::move(p));
}

GridFunction1::GridFunction1(Partition part, std::size_t dim)
    : part_(std::move(part)), dim_(dim), data_(part_.size() * dim, 0.0) {
    if (dim == 0)
        throw std::invalid_argument("GridFunction1: dim must be positive");
}

GridFunction1 GridFunction1::sample(const Partition& part, std::size_t dim,
                                    const std::function<void(double, std::span<double>)>& fn) {
    GridFunction1 g(part, dim);
    for (std::size_t i = 0; i < part.size(); ++i)
        fn(part[i], std::span<double>(g.at(i), dim));
    return g;
}

GridFunction2::GridFunction2(Partition part, std::size_t dim)
    : part_(std::move(part)), dim_(dim) {
    if (dim == 0)
        throw std::invalid_argument("GridFunction2: dim must be positive");
    data_.assign(pair_count() * dim_, 0.0);
}

std::size_t GridFunction2::pair_index(std::size_t i, std::size_t j) const {
    const std::size_t np = part_.size();
    if (i > j || j >= np)
        throw std::out_of_range("GridFunction2: need i <= j < size");
    return (i * (2 * np - i + 1)) / 2 + (j - i);
}

GridFunction2 GridFunction2::sample(const Partition& part, std::size_t dim,
                                    const std::function<void(double, double, std::span<double>)>& fn) {
    GridFunction2 h(part, dim);
    for (std::size_t i = 0; i < part.size(); ++i)
        for (std::size_t j = i + 1; j < part.size(); ++j)
            fn(part[i], part[j], std::span<double>(h.at(i, j), dim));
    return h;
}

void GridFunction3::value(std::size_t i, std::size_t j, std::size_t k,
                          std::span<double> out) const {
    const double* ik = h_.at(i, k);
    const double* ij = h_.at(i, j);
    const double* jk = h_.at(j, k);
    for (std::size_t c = 0; c < h_.dim(); ++c)
        out[c] = ik[c] - ij[c] - jk[c];
}

double GridFunction3::scalar(std::size_t i, std::size_t j, std::size_t k) const {
    return h_.scalar(i, k) - h_.scalar(i, j) - h_.scalar(j, k);
}

double GridFunction3::max_abs_adjacent() const {
    const std::size_t np = h_.partition().size();
    std::vector<double> buf(h_.dim());
    double m = 0.0;
    for (std::size_t i = 0; i + 2 < np; ++i) {
        value(i, i + 1, i + 2, buf);
        for (double v : buf)
            m = std::max(m, std::abs(v));
    }
    return m;
}

GridFunction2 delta1(const GridFunction1& g) {
    GridFunction2 h(g.partition(), g.dim());
    const std::size_t np = g.partition().size();
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = i + 1; j < np; ++j) {
            double* out = h.at(i, j);
            for (std::size_t c = 0; c < g.dim(); ++c)
                out[c] = g.at(j)[c] - g.at(i)[c];
        }
    return h;
}

GridFunction3 delta2(const GridFunction2& h) {
    if (h.partition().cells() < 2)
        throw std::invalid_argument("delta2: need at least two cells");
    return GridFunction3(h);
}

HolderEstimate holder_seminorm(const GridFunction2& h, double mu) {
    if (!(mu > 0.0))
        throw std::invalid_argument("holder_seminorm: mu must be positive");
    if (h.partition().cells() < 1)
        throw std::invalid_argument("holder_seminorm: empty increment set");
    HolderEstimate est;
    est.exponent = mu;
    const auto& t = h.partition().points();
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = i + 1; j < t.size(); ++j) {
            const double gap = std::pow(t[j] - t[i], mu);
            const double* v = h.at(i, j);
            for (std::size_t c = 0; c < h.dim(); ++c)
                est.norm = std::max(est.norm, std::abs(v[c]) / gap);
            ++est.pairs_used;
        }
    return est;
}

namespace {

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0)
        return 0.0;
    return (n * sxy - sx * sy) / den;
}

} // namespace

ConvergenceTable compensated_integral(const std::function<double(double, double)>& summand,
                                      const DyadicFamily& family) {
    if (family.levels + 1 < 3)
        throw std::invalid_argument("compensated_integral: insufficient refinement for order estimate");
    ConvergenceTable table;
    for (int k = 0; k <= family.levels; ++k) {
        Partition p = family.level(k);
        double s = 0.0;
        for (std::size_t i = 0; i < p.cells(); ++i)
            s += summand(p[i], p[i + 1]);
        table.rows.push_back({k, p.mesh(), s, 0.0, 0.0});
    }

    // Richardson step from the last three sums; falls back to the finest sum
    // when successive differences vanish (telescoping summands).
    const std::size_t L = table.rows.size();
    const double sK = table.rows[L - 1].value;
    const double d1 = table.rows[L - 1].value - table.rows[L - 2].value;
    const double d0 = table.rows[L - 2].value - table.rows[L - 3].value;
    const double scale = std::max({std::abs(sK), std::abs(table.rows[0].value), 1.0});
    if (std::abs(d1) < 1e-14 * scale || std::abs(d0) < 1e-14 * scale ||
        std::abs(d0) <= std::abs(d1)) {
        table.extrapolated = sK;
    } else {
        const double rate = d0 / d1; // ~ 2^p
        table.extrapolated = sK + d1 / (rate - 1.0);
    }

    std::vector<double> lx, ly;
    bool all_exact = true;
    for (auto& row : table.rows) {
        row.ref = table.extrapolated;
        row.abs_err = std::abs(row.value - table.extrapolated);
        if (row.abs_err > 1e-14 * scale)
            all_exact = false;
    }
    table.exact = all_exact;
    if (all_exact) {
        table.observed_order = std::numeric_limits<double>::infinity();
        return table;
    }
    const std::size_t tail = (L + 1) / 2;
    for (std::size_t i = L - tail; i < L; ++i) {
        if (table.rows[i].abs_err > 0.0) {
            lx.push_back(std::log(table.rows[i].mesh));
            ly.push_back(std::log(table.rows[i].abs_err));
        }
    }
    table.observed_order = (lx.size() >= 2) ? ls_slope(lx, ly)
                                            : std::numeric_limits<double>::infinity();
    return table;
}

} // namespace gplab

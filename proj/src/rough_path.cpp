#include "gplab/rough_path.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gplab {

namespace {

std::size_t ipow(std::size_t base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i)
        r *= base;
    return r;
}

// x^{n1}_{ab} (x) x^{n2}_{bc} accumulated into out (level n1+n2).
void tensor_product_accumulate(const double* a, std::size_t na, const double* b,
                               std::size_t nb, double* out) {
    for (std::size_t p = 0; p < na; ++p)
        for (std::size_t q = 0; q < nb; ++q)
            out[p * nb + q] += a[p] * b[q];
}

} // namespace

RoughLift::RoughLift(Partition part, std::size_t d, int levels, PairMode mode)
    : part_(std::move(part)), d_(d), N_(levels), mode_(mode) {
    if (levels < 1)
        throw std::invalid_argument("RoughLift: need at least one level");
    level_size_.resize(levels + 1, 0);
    tensors_.resize(levels + 1);
    const std::size_t slots = (mode == PairMode::Adjacent)
                                  ? part_.cells()
                                  : part_.size() * (part_.size() + 1) / 2;
    for (int n = 1; n <= levels; ++n) {
        level_size_[n] = ipow(d_, n);
        tensors_[n].assign(slots * level_size_[n], 0.0);
    }
}

std::size_t RoughLift::pair_slot(std::size_t i, std::size_t j) const {
    if (i > j || j >= part_.size())
        throw std::out_of_range("RoughLift: need i <= j < size");
    if (mode_ == PairMode::Adjacent) {
        if (j != i + 1)
            throw std::out_of_range("RoughLift: adjacent mode stores consecutive pairs only");
        return i;
    }
    const std::size_t np = part_.size();
    return (i * (2 * np - i + 1)) / 2 + (j - i);
}

double* RoughLift::tensor(int level, std::size_t i, std::size_t j) {
    return tensors_[level].data() + pair_slot(i, j) * level_size_[level];
}

const double* RoughLift::tensor(int level, std::size_t i, std::size_t j) const {
    return tensors_[level].data() + pair_slot(i, j) * level_size_[level];
}

double RoughLift::level_scale(int level) const {
    double m = 0.0;
    for (double v : tensors_[level])
        m = std::max(m, std::abs(v));
    return m;
}

RoughLift lift_piecewise_linear(const GridPath& path, int levels, PairMode mode) {
    const std::size_t d = path.d;
    const std::size_t cells = path.part.cells();
    if (levels > 4 || d > 3 || cells > 1024) {
        std::ostringstream msg;
        msg << "lift_piecewise_linear: budget exceeded (need N <= 4, d <= 3, cells <= 1024; got N="
            << levels << ", d=" << d << ", cells=" << cells << ")";
        throw std::invalid_argument(msg.str());
    }
    RoughLift lift(path.part, d, levels, mode);

    std::vector<double> dx(d);
    for (std::size_t i = 0; i < cells; ++i) {
        path.increment(i, i + 1, dx);
        // segment signature: x^n = dx^{(x) n} / n!
        double* x1 = lift.tensor(1, i, i + 1);
        std::copy(dx.begin(), dx.end(), x1);
        for (int n = 2; n <= levels; ++n) {
            const double* prev = lift.tensor(n - 1, i, i + 1);
            double* cur = lift.tensor(n, i, i + 1);
            const std::size_t prev_sz = lift.tensor_size(n - 1);
            for (std::size_t p = 0; p < prev_sz; ++p)
                for (std::size_t k = 0; k < d; ++k)
                    cur[p * d + k] = prev[p] * dx[k] / static_cast<double>(n);
        }
    }
    if (mode == PairMode::Adjacent)
        return lift;

    // Assemble non-adjacent pairs column by column with Chen's relation;
    // level 1 is written as a raw difference so it matches delta1 exactly.
    for (std::size_t j = 2; j < path.part.size(); ++j) {
        for (std::size_t i = j - 1; i-- > 0;) {
            double* x1 = lift.tensor(1, i, j);
            for (std::size_t k = 0; k < d; ++k)
                x1[k] = path.coord(j, k) - path.coord(i, k);
            for (int n = 2; n <= levels; ++n) {
                double* out = lift.tensor(n, i, j);
                const double* left = lift.tensor(n, i, j - 1);
                const double* right = lift.tensor(n, j - 1, j);
                const std::size_t sz = lift.tensor_size(n);
                for (std::size_t p = 0; p < sz; ++p)
                    out[p] = left[p] + right[p];
                for (int n1 = 1; n1 < n; ++n1)
                    tensor_product_accumulate(lift.tensor(n1, i, j - 1),
                                              lift.tensor_size(n1),
                                              lift.tensor(n - n1, j - 1, j),
                                              lift.tensor_size(n - n1), out);
            }
        }
    }
    return lift;
}

std::vector<std::vector<double>> chen_combine(const RoughLift& lift, std::size_t i,
                                              std::size_t j, std::size_t k) {
    if (!(i <= j && j <= k))
        throw std::invalid_argument("chen_combine: need i <= j <= k");
    std::vector<std::vector<double>> out(lift.levels() + 1);
    for (int n = 1; n <= lift.levels(); ++n) {
        out[n].assign(lift.tensor_size(n), 0.0);
        if (i == j) {
            const double* right = lift.tensor(n, j, k);
            std::copy(right, right + lift.tensor_size(n), out[n].begin());
            continue;
        }
        if (j == k) {
            const double* left = lift.tensor(n, i, j);
            std::copy(left, left + lift.tensor_size(n), out[n].begin());
            continue;
        }
        const double* left = lift.tensor(n, i, j);
        const double* right = lift.tensor(n, j, k);
        for (std::size_t p = 0; p < lift.tensor_size(n); ++p)
            out[n][p] = left[p] + right[p];
        for (int n1 = 1; n1 < n; ++n1)
            tensor_product_accumulate(lift.tensor(n1, i, j), lift.tensor_size(n1),
                                      lift.tensor(n - n1, j, k), lift.tensor_size(n - n1),
                                      out[n].data());
    }
    return out;
}

namespace {

std::vector<int> unpack_tuple(std::size_t flat, int level, std::size_t d) {
    std::vector<int> tup(level);
    for (int p = level - 1; p >= 0; --p) {
        tup[p] = static_cast<int>(flat % d);
        flat /= d;
    }
    return tup;
}

std::size_t pack_tuple(const std::vector<int>& tup, std::size_t d) {
    std::size_t flat = 0;
    for (int v : tup)
        flat = flat * d + static_cast<std::size_t>(v);
    return flat;
}

} // namespace

IdentityResidualReport check_multiplicativity(const RoughLift& lift) {
    if (lift.mode() != PairMode::All)
        throw std::invalid_argument("check_multiplicativity: needs an all-pairs lift");
    if (lift.partition().cells() < 2)
        throw std::invalid_argument("check_multiplicativity: need at least two cells");
    IdentityResidualReport rep;
    const std::size_t d = lift.dim();
    for (std::size_t i = 0; i + 2 < lift.partition().size(); ++i) {
        const std::size_t j = i + 1, k = i + 2;
        for (int n = 1; n <= lift.levels(); ++n) {
            const double scale = std::max(lift.level_scale(n), 1e-300);
            const std::size_t sz = lift.tensor_size(n);
            std::vector<double> rhs(sz, 0.0);
            const double* ij = lift.tensor(n, i, j);
            const double* jk = lift.tensor(n, j, k);
            for (std::size_t p = 0; p < sz; ++p)
                rhs[p] = ij[p] + jk[p];
            for (int n1 = 1; n1 < n; ++n1)
                tensor_product_accumulate(lift.tensor(n1, i, j), lift.tensor_size(n1),
                                          lift.tensor(n - n1, j, k),
                                          lift.tensor_size(n - n1), rhs.data());
            const double* ik = lift.tensor(n, i, k);
            for (std::size_t p = 0; p < sz; ++p) {
                const double r = std::abs(ik[p] - rhs[p]);
                if (r > rep.max_abs) {
                    rep.max_abs = r;
                    rep.max_rel = r / scale;
                    rep.argmax_times = {i, j, k};
                    rep.argmax_level = n;
                    rep.argmax_component = unpack_tuple(p, n, d);
                }
            }
        }
    }
    return rep;
}

std::vector<std::vector<int>> shuffle_set(const std::vector<int>& i_tuple,
                                          const std::vector<int>& j_tuple) {
    if (i_tuple.size() + j_tuple.size() > 8)
        throw std::invalid_argument("shuffle_set: total tuple length above 8");
    std::vector<std::vector<int>> out;
    std::vector<int> cur(i_tuple.size() + j_tuple.size());
    // walk all ways to merge while preserving both orders
    const std::size_t n = i_tuple.size(), m = j_tuple.size();
    auto rec = [&](auto&& self, std::size_t a, std::size_t b) -> void {
        const std::size_t pos = a + b;
        if (pos == n + m) {
            out.push_back(cur);
            return;
        }
        if (a < n) {
            cur[pos] = i_tuple[a];
            self(self, a + 1, b);
        }
        if (b < m) {
            cur[pos] = j_tuple[b];
            self(self, a, b + 1);
        }
    };
    rec(rec, 0, 0);
    return out;
}

IdentityResidualReport check_geometricity(const RoughLift& lift) {
    if (lift.levels() < 2)
        throw std::invalid_argument("check_geometricity: need level >= 2");
    IdentityResidualReport rep;
    const std::size_t d = lift.dim();
    const std::size_t np = lift.partition().size();

    auto pairs_of = [&](auto&& visit) {
        if (lift.mode() == PairMode::Adjacent) {
            for (std::size_t i = 0; i + 1 < np; ++i)
                visit(i, i + 1);
        } else {
            for (std::size_t i = 0; i < np; ++i)
                for (std::size_t j = i + 1; j < np; ++j)
                    visit(i, j);
        }
    };

    for (int n = 1; n < lift.levels(); ++n) {
        for (int m = 1; n + m <= lift.levels(); ++m) {
            const double scale = std::max(lift.level_scale(n + m), 1e-300);
            pairs_of([&](std::size_t i, std::size_t j) {
                const double* xn = lift.tensor(n, i, j);
                const double* xm = lift.tensor(m, i, j);
                const double* xnm = lift.tensor(n + m, i, j);
                for (std::size_t p = 0; p < lift.tensor_size(n); ++p) {
                    const auto ti = unpack_tuple(p, n, d);
                    for (std::size_t q = 0; q < lift.tensor_size(m); ++q) {
                        const auto tj = unpack_tuple(q, m, d);
                        double rhs = 0.0;
                        for (const auto& sh : shuffle_set(ti, tj))
                            rhs += xnm[pack_tuple(sh, d)];
                        const double r = std::abs(xn[p] * xm[q] - rhs);
                        if (r > rep.max_abs) {
                            rep.max_abs = r;
                            rep.max_rel = r / scale;
                            rep.argmax_times = {i, j, 0};
                            rep.argmax_level = n + m;
                            rep.argmax_component = ti;
                            rep.argmax_component.insert(rep.argmax_component.end(),
                                                        tj.begin(), tj.end());
                        }
                    }
                }
            });
        }
    }
    return rep;
}

std::vector<HolderEstimate> holder_profile(const RoughLift& lift) {
    const std::size_t np = lift.partition().size();
    if (np < 8)
        throw std::invalid_argument("holder_profile: need at least 8 grid points");
    if (lift.mode() != PairMode::All)
        throw std::invalid_argument("holder_profile: needs an all-pairs lift");

    const auto& t = lift.partition().points();
    std::vector<HolderEstimate> out;
    double gamma1 = 0.0;
    for (int n = 1; n <= lift.levels(); ++n) {
        // sup |x^n| per dyadic index lag, regressed against the mean gap
        std::vector<double> lx, ly;
        std::size_t pairs = 0;
        for (std::size_t lag = 1; lag < np; lag *= 2) {
            double sup = 0.0, gap_sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t i = 0; i + lag < np; ++i) {
                const double* v = lift.tensor(n, i, i + lag);
                for (std::size_t p = 0; p < lift.tensor_size(n); ++p)
                    sup = std::max(sup, std::abs(v[p]));
                gap_sum += t[i + lag] - t[i];
                ++cnt;
                ++pairs;
            }
            if (cnt > 0 && sup > 0.0) {
                lx.push_back(std::log(gap_sum / static_cast<double>(cnt)));
                ly.push_back(std::log(sup));
            }
        }
        HolderEstimate est;
        est.pairs_used = pairs;
        if (lx.size() >= 2) {
            const double nn = static_cast<double>(lx.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < lx.size(); ++i) {
                sx += lx[i];
                sy += ly[i];
                sxx += lx[i] * lx[i];
                sxy += lx[i] * ly[i];
            }
            const double den = nn * sxx - sx * sx;
            est.exponent = den == 0.0 ? 0.0 : (nn * sxy - sx * sy) / den;
        }
        if (n == 1)
            gamma1 = est.exponent;
        // seminorm evaluated at n * gamma_1
        const double mu = std::max(n * gamma1, 1e-6);
        double norm = 0.0;
        for (std::size_t i = 0; i < np; ++i)
            for (std::size_t j = i + 1; j < np; ++j) {
                const double gap = std::pow(t[j] - t[i], mu);
                const double* v = lift.tensor(n, i, j);
                for (std::size_t p = 0; p < lift.tensor_size(n); ++p)
                    norm = std::max(norm, std::abs(v[p]) / gap);
            }
        est.norm = norm;
        out.push_back(est);
    }
    return out;
}

} // namespace gplab

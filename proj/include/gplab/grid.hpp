#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gplab {

/// Partition of [t_0, t_n]: strictly increasing times, at least one cell.
class Partition {
  public:
    explicit Partition(std::vector<double> points);
    static Partition uniform(double t0, double t1, std::size_t cells);

    const std::vector<double>& points() const { return pts_; }
    double operator[](std::size_t i) const { return pts_[i]; }
    std::size_t size() const { return pts_.size(); }
    std::size_t cells() const { return pts_.size() - 1; }
    double t0() const { return pts_.front(); }
    double horizon() const { return pts_.back(); }
    double mesh() const { return mesh_; }

    /// Splits every cell into 2^k equal parts; contains the original points.
    Partition refine_dyadic(int k) const;
    /// Keeps every stride-th point (cells must be divisible by stride).
    Partition coarsen(std::size_t stride) const;

  private:
    std::vector<double> pts_;
    double mesh_;
};

/// Nested dyadic refinements of a base partition: level k has base_cells * 2^k cells.
struct DyadicFamily {
    Partition base;
    int levels; // number of refinement levels beyond the base

    Partition level(int k) const { return base.refine_dyadic(k); }
};

/// Vector-valued function on partition points (an element of C_1).
class GridFunction1 {
  public:
    GridFunction1(Partition part, std::size_t dim);
    static GridFunction1 sample(const Partition& part, std::size_t dim,
                                const std::function<void(double, std::span<double>)>& fn);

    const Partition& partition() const { return part_; }
    std::size_t dim() const { return dim_; }
    double* at(std::size_t i) { return data_.data() + i * dim_; }
    const double* at(std::size_t i) const { return data_.data() + i * dim_; }
    double scalar(std::size_t i) const { return data_[i * dim_]; }

  private:
    Partition part_;
    std::size_t dim_;
    std::vector<double> data_;
};

/// Vector-valued function on index pairs i <= j, zero on the diagonal (an element of C_2).
class GridFunction2 {
  public:
    GridFunction2(Partition part, std::size_t dim);
    static GridFunction2 sample(const Partition& part, std::size_t dim,
                                const std::function<void(double, double, std::span<double>)>& fn);

    const Partition& partition() const { return part_; }
    std::size_t dim() const { return dim_; }
    double* at(std::size_t i, std::size_t j) { return data_.data() + pair_index(i, j) * dim_; }
    const double* at(std::size_t i, std::size_t j) const {
        return data_.data() + pair_index(i, j) * dim_;
    }
    double scalar(std::size_t i, std::size_t j) const { return at(i, j)[0]; }

    std::size_t pair_index(std::size_t i, std::size_t j) const;
    std::size_t pair_count() const { return part_.size() * (part_.size() + 1) / 2; }

  private:
    Partition part_;
    std::size_t dim_;
    std::vector<double> data_;
};

/// Lazy view of a 2-increment on index triples i <= j <= k; never materialized.
class GridFunction3 {
  public:
    explicit GridFunction3(GridFunction2 h) : h_(std::move(h)) {}

    const Partition& partition() const { return h_.partition(); }
    std::size_t dim() const { return h_.dim(); }
    /// value(i,j,k) = h(i,k) - h(i,j) - h(j,k), componentwise.
    void value(std::size_t i, std::size_t j, std::size_t k, std::span<double> out) const;
    double scalar(std::size_t i, std::size_t j, std::size_t k) const;
    /// Max |value| over adjacent triples (i, i+1, i+2) and all components.
    double max_abs_adjacent() const;

  private:
    GridFunction2 h_;
};

struct HolderEstimate {
    double exponent = 0.0;
    double norm = 0.0;
    std::size_t pairs_used = 0;
};

/// (delta g)(i,j) = g(j) - g(i).
GridFunction2 delta1(const GridFunction1& g);

/// (delta h)(i,j,k) = h(i,k) - h(i,j) - h(j,k), evaluated lazily.
GridFunction3 delta2(const GridFunction2& h);

/// sup over i < j of |h(i,j)|_inf / (t_j - t_i)^mu.
HolderEstimate holder_seminorm(const GridFunction2& h, double mu);

struct ConvergenceRow {
    int level = 0;
    double mesh = 0.0;
    double value = 0.0;
    double ref = 0.0;
    double abs_err = 0.0;
};

/// Riemann sums across a dyadic refinement family plus extrapolated limit and order.
struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double extrapolated = 0.0;
    double observed_order = 0.0; // +inf when the sums are exact at every level
    bool exact = false;

    double final_abs_err() const { return rows.empty() ? 0.0 : rows.back().abs_err; }
};

/// Sums summand(t_i, t_{i+1}) over consecutive pairs of each refinement level.
/// Needs at least 3 levels for the order estimate. The observed order is the
/// least-squares slope of log |S_k - extrapolated| against log mesh over the
/// last ceil(levels/2) levels.
ConvergenceTable compensated_integral(const std::function<double(double, double)>& summand,
                                      const DyadicFamily& family);

} // namespace gplab

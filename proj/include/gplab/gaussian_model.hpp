#pragma once

#include "gplab/grid.hpp"

#include <memory>
#include <string>
#include <vector>

namespace gplab {

/// Covariance-level description of a centered Gaussian process with i.i.d.
/// coordinates: R_{st}, the variance R_t, its derivative R'_t and the partial
/// derivative d/ds R_{sy} feeding the operator A.
class GaussianModel {
  public:
    virtual ~GaussianModel() = default;

    virtual double covariance(double s, double t) const = 0;
    virtual double variance(double t) const { return covariance(t, t); }
    virtual double variance_derivative(double t) const = 0;
    virtual double partial_s_covariance(double s, double y) const = 0;

    virtual double horizon() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;

    /// R_b - R_a; exact closed form wherever the model has one.
    virtual double variance_increment(double a, double b) const {
        return variance(b) - variance(a);
    }
    double max_variance_on(const Partition& part) const;
};

/// Fractional Brownian motion: R_{st} = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
class FbmModel final : public GaussianModel {
  public:
    FbmModel(double hurst, double horizon, std::size_t dim);

    double covariance(double s, double t) const override;
    double variance(double t) const override;
    double variance_derivative(double t) const override;
    double partial_s_covariance(double s, double y) const override;
    double horizon() const override { return T_; }
    std::size_t dimension() const override { return d_; }
    std::string name() const override { return "fbm"; }
    double hurst() const { return H_; }

  private:
    double H_, T_;
    std::size_t d_;
};

/// Degenerate model with R_{st} identically constant; delta R vanishes on
/// every cell, which collapses the Skorohod corrections.
class FlatModel final : public GaussianModel {
  public:
    FlatModel(double level, double horizon, std::size_t dim)
        : c_(level), T_(horizon), d_(dim) {}

    double covariance(double, double) const override { return c_; }
    double variance_derivative(double) const override { return 0.0; }
    double partial_s_covariance(double, double) const override { return 0.0; }
    double horizon() const override { return T_; }
    std::size_t dimension() const override { return d_; }
    std::string name() const override { return "flat"; }

  private:
    double c_, T_;
    std::size_t d_;
};

double fbm_covariance(double s, double t, double hurst);

/// Smooth bump in D_T: amp * exp(-1/(1-u^2)) for u = (t-c)/w, |u| < 1, else 0.
/// Value and the first two derivatives are analytic; support [c-w, c+w] must
/// sit inside (0,T), enforced at construction against a given horizon.
class BumpFunction {
  public:
    BumpFunction(double center, double width, double horizon, double amplitude = 1.0);

    double value(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;
    double support_lo() const { return c_ - w_; }
    double support_hi() const { return c_ + w_; }
    double center() const { return c_; }
    double width() const { return w_; }
    double amplitude() const { return amp_; }

  private:
    double c_, w_, amp_;
};

struct QuadratureOptions {
    double rtol = 1e-8;
    double atol = 1e-12;
    int initial_panels = 16; // per side of the kernel split
    int max_doublings = 12;
    double grading = 3.0; // power-law clustering toward the singular point
};

/// A beta(s) = -int_0^T d/ds R_{sy} beta'(y) dy. The kernel may blow up at
/// y = s (fBm with H < 1/2), so the integral is split there and evaluated on
/// panels graded toward the split, doubling until the relative change falls
/// under rtol. Throws on non-convergence, reporting the last two estimates.
double operator_A(const GaussianModel& model, const BumpFunction& beta, double s,
                  const QuadratureOptions& opts = {});

/// <1_{[a,b)}^{[l]}, beta^{[j]}>_H = 1_{(j=l)} int_a^b A beta(s) ds.
double inner_product_indicator_bump(const GaussianModel& model, double a, double b,
                                    const BumpFunction& beta, std::size_t j, std::size_t l,
                                    const QuadratureOptions& opts = {});

/// G helper: int_0^rho A beta(s) ds.
double accumulated_A(const GaussianModel& model, const BumpFunction& beta, double rho,
                     const QuadratureOptions& opts = {});

/// ||beta^{[j]}||_H^2 = E[x(beta)^2] = int int beta'(u) beta'(v) R_{uv} du dv.
double bump_h_norm_squared(const GaussianModel& model, const BumpFunction& beta,
                           int panels = 64);

/// E[x(beta^{[j]}) (x_b(j) - x_a(j))] = -int (R_{bu} - R_{au}) beta'(u) du.
double bump_increment_cross_moment(const GaussianModel& model, const BumpFunction& beta,
                                   double a, double b, int panels = 256);

/// d-dimensional path on a grid.
struct GridPath {
    Partition part;
    std::size_t d;
    std::vector<double> values; // (n+1) x d, row-major

    GridPath(Partition p, std::size_t dim);
    static GridPath from_function(const Partition& p, std::size_t dim,
                                  const std::function<void(double, std::span<double>)>& fn);

    double* at(std::size_t i) { return values.data() + i * d; }
    const double* at(std::size_t i) const { return values.data() + i * d; }
    double coord(std::size_t i, std::size_t k) const { return values[i * d + k]; }
    void increment(std::size_t i, std::size_t j, std::span<double> out) const;
    /// Piecewise-linear interpolation at time t.
    void interpolate(double t, std::span<double> out) const;
    /// Path restricted to every stride-th grid point.
    GridPath restrict_stride(std::size_t stride) const;
};

/// Exact-covariance sampler: dense factor L of the grid covariance with
/// x = L xi per coordinate. Streams are indexed by (seed, sample, coordinate),
/// so results are identical under any parallel schedule.
class PathSampler {
  public:
    PathSampler(std::shared_ptr<const GaussianModel> model, Partition part,
                std::uint64_t seed);

    GridPath sample(std::size_t index) const;
    const Partition& partition() const { return part_; }
    const GaussianModel& model() const { return *model_; }
    std::uint64_t seed() const { return seed_; }

  private:
    std::shared_ptr<const GaussianModel> model_;
    Partition part_;
    std::uint64_t seed_;
    std::size_t np_;
    std::vector<double> factor_; // np x np row-major, lower-triangular or eigen factor
    std::vector<bool> degenerate_; // points with zero variance are pinned to 0
};

/// Materialized ensemble of sampled paths on a shared partition.
struct PathEnsemble {
    std::shared_ptr<const GaussianModel> model;
    Partition part;
    std::size_t n_samples;
    std::uint64_t seed;
    std::vector<GridPath> paths;
};

PathEnsemble sample_ensemble(std::shared_ptr<const GaussianModel> model,
                             const Partition& part, std::size_t n_samples,
                             std::uint64_t seed, unsigned workers = 1);

} // namespace gplab

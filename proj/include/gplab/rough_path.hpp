#pragma once

#include "gplab/gaussian_model.hpp"
#include "gplab/grid.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace gplab {

enum class PairMode { Adjacent, All };

/// Location of the worst residual found by an identity check.
struct IdentityResidualReport {
    double max_abs = 0.0;
    double max_rel = 0.0;
    std::array<std::size_t, 3> argmax_times{0, 0, 0}; // (i,j,k); k unused for pair checks
    int argmax_level = 0;
    std::vector<int> argmax_component;
};

/// Stack {x^1, ..., x^N} of level-n tensors over grid pairs. Level n holds
/// d^n entries per pair, tuple (i_1,...,i_n) stored row-major. Adjacent mode
/// keeps only consecutive pairs (enough for the modified Riemann sums); All
/// mode keeps every pair i <= j.
class RoughLift {
  public:
    RoughLift(Partition part, std::size_t d, int levels, PairMode mode);

    const Partition& partition() const { return part_; }
    std::size_t dim() const { return d_; }
    int levels() const { return N_; }
    PairMode mode() const { return mode_; }

    double* tensor(int level, std::size_t i, std::size_t j);
    const double* tensor(int level, std::size_t i, std::size_t j) const;
    std::size_t tensor_size(int level) const { return level_size_[level]; }

    /// Max |entry| at one level over all stored pairs (relative-error scale).
    double level_scale(int level) const;

  private:
    std::size_t pair_slot(std::size_t i, std::size_t j) const;

    Partition part_;
    std::size_t d_;
    int N_;
    PairMode mode_;
    std::vector<std::size_t> level_size_;       // d^n
    std::vector<std::vector<double>> tensors_;  // per level: slots x d^n
};

/// Signature of the piecewise-linear interpolation: on one segment
/// x^n(i_1..i_n) = dx(i_1)...dx(i_n)/n!, other pairs assembled by Chen.
/// Enforces the default budget N <= 4, d <= 3, cells <= 1024.
RoughLift lift_piecewise_linear(const GridPath& path, int levels,
                                PairMode mode = PairMode::All);

/// Chen combination at (i,k) from stored tensors at (i,j) and (j,k):
/// x^n_{ik} = x^n_{ij} + x^n_{jk} + sum_{n1} x^{n1}_{ij} (x) x^{n-n1}_{jk}.
std::vector<std::vector<double>> chen_combine(const RoughLift& lift, std::size_t i,
                                              std::size_t j, std::size_t k);

/// Residual of the multiplicativity identity over adjacent triples.
IdentityResidualReport check_multiplicativity(const RoughLift& lift);

/// Residual of the shuffle identity x^n(i) x^m(j) = sum_{Sh} x^{n+m} over all
/// stored pairs and n+m <= N.
IdentityResidualReport check_geometricity(const RoughLift& lift);

/// All order-preserving interleavings of two index tuples (|i|+|j| <= 8).
std::vector<std::vector<int>> shuffle_set(const std::vector<int>& i_tuple,
                                          const std::vector<int>& j_tuple);

/// Per-level Holder exponent estimates by log-log regression over dyadic
/// index lags, with the seminorm evaluated at n * gamma_1.
std::vector<HolderEstimate> holder_profile(const RoughLift& lift);

} // namespace gplab

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace gplab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic per-stream generator: the draw sequence depends only on
/// (seed, stream), never on which thread consumes it. Core is xoshiro-style
/// splitmix chaining; normals via Box-Muller on explicit 53-bit uniforms.
class StreamRng {
  public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ 0x6a09e667f3bcc909ULL;
        splitmix64(s);
        s ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
        state_ = s;
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in (0,1): 53 random bits, never exactly 0.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Runs fn(i) for i in [0,n) on `workers` threads with static contiguous
/// blocks. Results must be written to disjoint preallocated slots; any
/// reduction happens afterwards in index order, so output is independent of
/// the worker count.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::thread> threads;
    threads.reserve(w);
    const std::size_t block = (n + w - 1) / w;
    for (unsigned k = 0; k < w; ++k) {
        const std::size_t lo = k * block;
        const std::size_t hi = std::min(n, lo + block);
        if (lo >= hi)
            break;
        threads.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i)
                fn(i);
        });
    }
    for (auto& t : threads)
        t.join();
}

/// Sum in a fixed pairwise (tree) order; the result does not depend on how the
/// terms were produced.
inline double tree_sum(const std::vector<double>& v) {
    if (v.empty())
        return 0.0;
    std::vector<double> cur = v;
    while (cur.size() > 1) {
        std::vector<double> next((cur.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < cur.size(); i += 2)
            next[i / 2] = cur[i] + cur[i + 1];
        if (cur.size() % 2 == 1)
            next.back() = cur.back();
        cur.swap(next);
    }
    return cur[0];
}

} // namespace gplab

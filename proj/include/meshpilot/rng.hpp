#pragma once

#include <cstdint>
#include <vector>

namespace meshpilot {

/// SplitMix64 pseudo-random stream (Steele, Lea & Flood 2014). Chosen as the
/// corpus generator because the algorithm is public, tiny, and produces the
/// same sequence for the same seed on every platform; corpora record the seed
/// they were generated from.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Lemire multiply-shift; no rejection loop, so
    /// the draw count per call is fixed and replay stays aligned.
    std::uint64_t next_below(std::uint64_t n) {
        const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Draws k distinct elements from pool (partial Fisher-Yates), in draw order.
    template <typename T>
    std::vector<T> sample(std::vector<T> pool, std::size_t k) {
        std::vector<T> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k && !pool.empty(); ++i) {
            const std::size_t j = static_cast<std::size_t>(next_below(pool.size()));
            out.push_back(pool[j]);
            pool[j] = pool.back();
            pool.pop_back();
        }
        return out;
    }

private:
    std::uint64_t state_;
};

}  // namespace meshpilot

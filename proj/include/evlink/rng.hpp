// Deterministic random sampling helpers.
//
// All randomness in the toolkit flows through these functions on top of
// std::mt19937_64 raw draws. The std::*_distribution adaptors are
// implementation-defined, so they are avoided: with these helpers a given
// seed produces the same stream on every standard library.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace evlink {

// SplitMix64 step; used to derive independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d4a2ca9d6b7c5bull;
    return z ^ (z >> 31);
}

// Sub-seed for stream `index` of a master seed (e.g. one stream per LED).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0xd1b54a32d192ed03ull * (index + 1));
    return splitmix64(s);
}

// Uniform double in [0, 1) with 53-bit resolution.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

// Uniform integer in [0, n) by rejection (unbiased).
inline std::uint64_t uniform_index(std::mt19937_64& g, std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = g();
    while (v >= limit) v = g();
    return v % n;
}

inline bool bernoulli(std::mt19937_64& g, double p) {
    return uniform01(g) < p;
}

// Poisson sample by Knuth's product method. Large means are split into
// chunks with mean <= 16 so exp(-mean) never underflows; cost is O(mean),
// which is fine at the rates used here.
inline std::uint64_t poisson(std::mt19937_64& g, double mean) {
    std::uint64_t total = 0;
    while (mean > 16.0) {
        double chunk = 16.0;
        const double l = std::exp(-chunk);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01(g);
        } while (p > l);
        total += k - 1;
        mean -= chunk;
    }
    if (mean > 0.0) {
        const double l = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01(g);
        } while (p > l);
        total += k - 1;
    }
    return total;
}

}  // namespace evlink

#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace asyadmm {

using Rng = std::mt19937_64;

namespace detail {

// mt19937_64 output is fixed by the standard; the <random> distributions are
// not. These helpers keep graph and delay sampling reproducible across
// standard library implementations.

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound]. Modulo bias is below 2^-50 for small bounds.
inline std::uint64_t uniform_upto(Rng& rng, std::uint64_t bound) {
    return rng() % (bound + 1);
}

inline bool bernoulli(Rng& rng, double prob) {
    return uniform01(rng) < prob;
}

template <typename T>
void fisher_yates(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_upto(rng, i - 1));
        std::swap(v[i - 1], v[j]);
    }
}

/// splitmix64 finalizer; derives independent stream seeds from one run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail
}  // namespace asyadmm

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace shardplan {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// All seeded components draw their stream seed through here, so a single
/// top-level seed pins every random decision the toolkit makes.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view component) {
    std::uint64_t s = global_seed ^ fnv1a64(component);
    return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view component,
                                 std::uint64_t index) {
    std::uint64_t s = global_seed ^ fnv1a64(component);
    s = splitmix64(s) ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return splitmix64(s);
}

// mt19937_64 output is fully specified by the standard; the distribution
// helpers below are hand-rolled because the std:: distributions are not,
// and plan bytes must not depend on the standard library flavor.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Unbiased draw in [0, n). n must be > 0.
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t x = g();
        if (x >= threshold) return x % n;
    }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace shardplan

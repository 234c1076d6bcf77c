#ifndef GSMDG_RNG_HPP
#define GSMDG_RNG_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace gsmdg {

/// Engine used everywhere in the library. Every random draw flows from a
/// 64-bit seed through this engine so results are a pure function of seeds.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed-splitting rule: the child seed of (base, a, b) is a chained SplitMix64
/// hash of the triple. Used for (master seed, cell, replicate) and for the
/// per-replicate sub-streams (graph, population, dynamics).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ (a * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    h = splitmix64(h ^ (b * 0xABC98388FB8FAC03ULL + 0x632BE59BD9B4E019ULL));
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling keeps it unbiased and,
/// unlike std::uniform_int_distribution, identical across standard libraries.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
}

inline bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

/// Standard normal via the Marsaglia polar method (portable, unlike
/// std::normal_distribution whose algorithm is implementation-defined).
inline double standard_normal(Rng& rng) {
    double u, v, s;
    do {
        u = 2.0 * uniform01(rng) - 1.0;
        v = 2.0 * uniform01(rng) - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
}

}  // namespace gsmdg

#endif  // GSMDG_RNG_HPP

#pragma once

#include <cstdint>
#include <cmath>

namespace rlscale {

// Deterministic, platform-independent PRNG used for every random draw in the
// project. std::mt19937 + distributions would tie results to a particular
// standard library, which breaks the bit-reproducibility guarantees the run
// logs make. SplitMix64 is tiny and well understood.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), n >= 1. Rejection sampling avoids modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r = next_u64();
        while (r >= limit) {
            r = next_u64();
        }
        return r % n;
    }

    // Standard normal via Box-Muller (sine branch discarded, keeps the
    // generator stateless with respect to caching).
    double gaussian() {
        double u1 = uniform01();
        while (u1 <= 0.0) {
            u1 = uniform01();
        }
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// Hash-combine for deriving child seeds. Documented and stable: derived seeds
// written into run manifests must reproduce across versions.
inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
    SplitMix64 rng(a ^ (0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2)));
    rng.next_u64();
    return rng.next_u64() ^ b;
}

inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return seed_mix(seed_mix(a, b), c);
}

inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return seed_mix(seed_mix(a, b, c), d);
}

// FNV-1a for hashing strings into seed material (axis names, task ids).
inline std::uint64_t fnv1a(const char* s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (; *s; ++s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*s));
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace rlscale

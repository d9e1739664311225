#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace rcts {

/// Seeded random stream with platform-independent draws.
///
/// std::uniform_*_distribution output differs between standard libraries, so
/// the conversions from raw 64-bit words are done here instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<std::size_t>(x % bound);
    }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a string key.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view key) {
    return splitmix64(fnv1a64(key, splitmix64(base)));
}

}  // namespace rcts

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace bagsel {

/// splitmix64 finalizer (Steele, Lea, Flood / Vigna). Used both as the core
/// generator step and as the seed-mixing function throughout the library, so
/// every derived stream is a pure function of (seed, indices) and results do
/// not depend on thread scheduling or the C++ standard library in use.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derive a child seed from a parent seed and a stream index.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x9E3779B97F4A7C15ULL));
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) {
    return mix_seed(mix_seed(seed, a, b), c);
}

/// Small deterministic PRNG (splitmix64 stream). The uniform and normal
/// draws are implemented here rather than with <random> distributions,
/// whose output is implementation-defined; this keeps scores bitwise
/// reproducible for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_++); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller (no spare caching; call order alone
    /// determines the stream).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Random permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::uint64_t state_;
};

/// Seed-domain tags; keeps derived streams for unrelated stages disjoint.
namespace seed_tag {
inline constexpr std::uint64_t kOuterSplit = 0x01;
inline constexpr std::uint64_t kTuning = 0x02;
inline constexpr std::uint64_t kBagging = 0x03;
inline constexpr std::uint64_t kPvalue = 0x04;
inline constexpr std::uint64_t kModel = 0x05;
inline constexpr std::uint64_t kImportance = 0x06;
inline constexpr std::uint64_t kSynth = 0x07;
}  // namespace seed_tag

}  // namespace bagsel

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace regret_lab {

/// Odd multiplier used to spread replication indices before mixing
/// (the 64-bit golden ratio).
inline constexpr std::uint64_t kSeedStride = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output finalizer.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of replication `rep_index` under `master_seed`:
/// mix(master_seed XOR rep_index * kSeedStride).
constexpr std::uint64_t replication_seed(std::uint64_t master_seed,
                                         std::uint64_t rep_index) noexcept {
    return splitmix64_mix(master_seed ^ (rep_index * kSeedStride));
}

/**
 * Random stream used throughout the library.
 *
 * Wraps std::mt19937_64, whose output sequence is fixed by the standard. The
 * standard distributions are not portable across library implementations, so
 * the conversions to real numbers are done here.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unit-rate exponential via inversion.
    double exponential() { return -std::log1p(-uniform()); }

private:
    std::mt19937_64 engine_;
};

} // namespace regret_lab

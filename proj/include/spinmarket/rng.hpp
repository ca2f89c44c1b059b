#pragma once

#include <cstdint>
#include <random>

namespace spinmarket {

/// Portable, seedable random stream driving a simulation.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. The derived distributions are implemented here rather than
/// taken from <random>, because std::uniform_int_distribution and
/// std::normal_distribution differ between standard libraries.
///
///   uniform_index(n): Lemire multiply-shift on one 64-bit word, rejecting
///                     words in the biased low region.
///   uniform01():      top 53 bits of one word scaled by 2^-53.
///   standard_normal(): Marsaglia polar method; each accepted pair yields two
///                     variates, the second returned on the next call.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform real in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double standard_normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive independent per-run seeds from one base.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed drawn from system entropy, for runs that did not specify one.
std::uint64_t entropy_seed();

}  // namespace spinmarket

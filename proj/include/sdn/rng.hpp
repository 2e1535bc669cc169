// Counter-based deterministic random numbers.
//
// Every random draw in this library is a pure function of
// (seed, stream, counter), so sample streams can be partitioned per point
// or per step and regenerated independently, in any order, on any thread.
//
// Generator: SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom
// number generators", OOPSLA 2014) evaluated at arbitrary counter offsets:
//
//   base     = mix64(mix64(seed + GOLDEN) + stream)
//   value(n) = mix64(base + n * GOLDEN)
//
// where mix64 is the SplitMix64 finalizer and GOLDEN = 0x9E3779B97F4A7C15.
// Gaussians come from Box-Muller on two consecutive uniforms; no generator
// state is cached between draws.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdn {

struct RngSeed {
    std::uint64_t value = 0;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

}  // namespace detail

/// One independent stream of the counter-based generator. Copyable; copies
/// share no state. `at()` jumps to an absolute counter, which is how callers
/// partition a stream across points (fixed stride per draw).
class RngStream {
public:
    RngStream(RngSeed seed, std::uint64_t stream, std::uint64_t counter = 0)
        : base_(detail::mix64(detail::mix64(seed.value + detail::kGolden) + stream)),
          counter_(counter) {}

    std::uint64_t next_u64() { return detail::mix64(base_ + (counter_++) * detail::kGolden); }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (cosine branch). Consumes 2 counters.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t counter() const { return counter_; }

    /// Same stream positioned at an absolute counter.
    RngStream at(std::uint64_t counter) const {
        RngStream s = *this;
        s.counter_ = counter;
        return s;
    }

private:
    std::uint64_t base_;
    std::uint64_t counter_;
};

/// Stream identifiers. Fixed here so independent subsystems never collide.
/// Per-step streams pack the step index into the low 32 bits.
namespace streams {
inline constexpr std::uint64_t kSurfaceSampling = 1ull << 32;
inline constexpr std::uint64_t kNoise = 2ull << 32;
inline constexpr std::uint64_t kParamInit = 3ull << 32;
inline constexpr std::uint64_t kTrainSigma = 4ull << 32;
inline constexpr std::uint64_t kTrainPatchPick = 5ull << 32;
inline constexpr std::uint64_t kTrainAnchors = 6ull << 32;
inline constexpr std::uint64_t kTrainNeighborhood = 7ull << 32;
inline constexpr std::uint64_t kTrainNoise = 8ull << 32;
inline constexpr std::uint64_t kUpsample = 9ull << 32;

inline constexpr std::uint64_t per_step(std::uint64_t stream, std::uint64_t step) {
    return stream | (step & 0xFFFFFFFFull);
}
}  // namespace streams

}  // namespace sdn

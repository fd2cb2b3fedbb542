#pragma once

#include <cstdint>
#include <random>

namespace rankprior {

// Seeded generator with explicit stream splitting. A stream is identified by
// (root seed, stream id); the engine seed is SplitMix64 of both, so replicate
// k of a study always sees the same draws regardless of scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    static Rng stream(std::uint64_t root_seed, std::uint64_t stream_id) {
        return Rng(mix(root_seed) ^ mix(stream_id + 0x9E3779B97F4A7C15ULL));
    }

    // Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal (Box-Muller, one value per call).
    double normal() noexcept;

    double exponential(double rate) noexcept;

    std::uint64_t next() noexcept { return engine_(); }

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rankprior

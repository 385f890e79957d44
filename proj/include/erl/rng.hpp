#pragma once

// Counter-based SplitMix64 streams.
//
// Stream derivation is fixed and documented so that Monte Carlo runs are
// reproducible bit-for-bit across platforms and thread counts:
//   state0(seed, stream) = mix(seed ^ mix(stream + GOLDEN))
// where mix is the splitmix64 finalizer and GOLDEN = 0x9E3779B97F4A7C15.
// Every draw advances the counter by GOLDEN and finalizes it; all arithmetic
// is exact 64-bit integer arithmetic, so identical (seed, stream) yields
// identical draws everywhere.

#include <cstdint>

namespace erl {

class SplitMix64 {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static SplitMix64 for_stream(std::uint64_t seed, std::uint64_t stream) {
        return SplitMix64(mix(seed ^ mix(stream + kGolden)));
    }

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix(state_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound) by rejection (bound > 0).
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
        for (;;) {
            std::uint64_t v = next_u64();
            if (v < limit) return v % bound;
        }
    }

private:
    std::uint64_t state_;
};

} // namespace erl

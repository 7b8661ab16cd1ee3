#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace grainstack {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based draw: every (seed, stream, counter) triple yields an
// independent 64-bit value, so a visit's randomness depends only on what is
// visited, never on which thread visits it or in what order.
constexpr std::uint64_t keyed_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return mix64(mix64(seed ^ mix64(stream)) ^ (counter * 0xD1B54A32D192ED03ull));
}

// Top 53 bits as a double in [0, 1).
constexpr double unit_interval(std::uint64_t bits) { return double(bits >> 11) * 0x1.0p-53; }

// Multiply-shift reduction of the high 32 bits into [0, n).
constexpr std::uint32_t bounded(std::uint64_t bits, std::uint32_t n) {
    return std::uint32_t(((bits >> 32) * std::uint64_t(n)) >> 32);
}

// Sequential, splittable generator over keyed_draw. Implemented here rather
// than with <random> distributions so streams are identical on every
// standard library.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    std::uint64_t next() { return keyed_draw(seed_, stream_, counter_++); }

    // Independent child generator; does not advance this one.
    SplitRng split(std::uint64_t child) const { return SplitRng(mix64(seed_ ^ stream_), child); }

    // Uniform integer in [0, n), n >= 1 (Lemire rejection, unbiased).
    std::uint64_t below(std::uint64_t n) {
        while (true) {
            const unsigned __int128 m = (unsigned __int128)next() * n;
            const std::uint64_t low = std::uint64_t(m);
            if (low >= (0 - n) % n) return std::uint64_t(m >> 64);
        }
    }

    // Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + std::int64_t(below(std::uint64_t(hi - lo) + 1));
    }

    double uniform() { return unit_interval(next()); }

    // Standard normal via Box-Muller (one value per call).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace grainstack

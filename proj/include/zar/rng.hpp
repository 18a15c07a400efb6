#pragma once

// Counted, splittable RNG streams. Every consumer owns its stream; parallel
// code derives one substream per task from a master seed so results do not
// depend on scheduling or worker count.

#include <cstdint>
#include <random>

#include "zar/normal.hpp"

namespace zar::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index * 0xD6E8FEB86659FD93ULL + 1));
}

class Stream {
public:
    explicit Stream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Independent child stream; deterministic in (seed, index).
    Stream substream(std::uint64_t index) const {
        return Stream(derive_seed(seed_, index));
    }

    // Uniform on the open interval (0, 1), built from the raw 64-bit output
    // so the value sequence does not depend on the standard library.
    double uniform() {
        const std::uint64_t bits = engine_();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform on (0, a).
    double uniform_open(double a) { return a * uniform(); }

    // Standard normal by inversion (one uniform per draw).
    double normal() { return norm_quantile(uniform()); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace zar::rng

#pragma once

#include <cstdint>
#include <string_view>

namespace synmine {

// Deterministic 64-bit generator (splitmix64). All randomized stages use this
// generator so that a given seed produces the same artifacts on every platform;
// std::uniform_int_distribution and friends are implementation-defined and are
// deliberately avoided.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound) without modulo bias.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Stable seed derivation for counter-based streams: the (master, key, index)
// triple fully determines the stream, independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key, std::uint64_t index) {
    Rng mix(master ^ fnv1a64(key) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    mix.next();
    return mix.next();
}

} // namespace synmine

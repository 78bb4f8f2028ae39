// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace vmimo {

// SplitMix64 finalizer; used to derive independent seeds from structured keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> key) {
    std::uint64_t h = mix64(base);
    for (std::uint64_t k : key)
        h = mix64(h ^ k);
    return h;
}

/// Counter-style SplitMix64 stream. Cheap to construct, so every link can own
/// one keyed by (trial seed, link identity) and results do not depend on the
/// order links are built in. Satisfies UniformRandomBitGenerator.
class Substream {
public:
    using result_type = std::uint64_t;

    explicit Substream(std::uint64_t seed) : state_(seed) {}
    Substream(std::uint64_t base, std::initializer_list<std::uint64_t> key)
        : state_(derive_seed(base, key)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

} // namespace vmimo

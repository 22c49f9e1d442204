#pragma once

#include <cstdint>
#include <random>

namespace facegen::sampling {

/// Every sampler takes one of these by reference and advances it; there is no
/// global generator.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of independent stream i derived from a root seed: seed XOR hash(i).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) { return seed ^ splitmix64(stream); }

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(stream_seed(seed, stream)); }

}  // namespace facegen::sampling

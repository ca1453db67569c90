#pragma once

#include <cstdint>

namespace ranslice {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform in [0, 1) from (seed, key); 53 random bits.
constexpr double unit_hash(std::uint64_t seed, std::uint64_t key) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(key));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Child seed for a named stream of a run, e.g. one per slice or per cell.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed * 0x100000001B3ULL + stream);
}

}  // namespace ranslice

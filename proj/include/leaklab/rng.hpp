#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace leaklab {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; the mixing step behind every derived seed.
constexpr Seed splitmix64(Seed x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a parent and a path of stream indices, e.g.
/// derive_seed(seed, {sweep_index, repeat_index, fold}). Independent of call
/// order, so parallel workers reproduce serial results.
constexpr Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) noexcept {
    Seed s = splitmix64(parent);
    for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    return s;
}

inline Rng make_rng(Seed seed) { return Rng(splitmix64(seed)); }

}  // namespace leaklab

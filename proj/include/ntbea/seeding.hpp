#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ntbea {

using Rng = std::mt19937_64;

// splitmix64 step (Steele, Lea & Flood). Good avalanche, cheap, and stable
// across platforms -- used for all seed derivation so that streams are
// reproducible from (master seed, purpose, index) alone.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over a string, then one splitmix64 pass to spread the bits.
constexpr std::uint64_t hash_label(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

// Child seed for stream `index` within the cell identified by `cell_key`.
// cell_key should be content-derived (e.g. hash_label of "branin/std/1000")
// so that adding new cells to an experiment never perturbs existing streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell_key,
                                    std::uint64_t index) {
    return splitmix64(splitmix64(master ^ cell_key) + index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace ntbea

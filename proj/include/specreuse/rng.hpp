#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace specreuse {

/// All randomness flows through mt19937_64 streams whose seeds are derived
/// from a master seed with splitmix64. Derivation depends only on the master
/// seed and the stream keys, never on draw order or worker count, so
/// independent workers get reproducible, non-overlapping streams.
using Stream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for the stream identified by (key_a, key_b) under `master`.
/// child = splitmix64(splitmix64(splitmix64(master) ^ key_a) ^ key_b)
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t key_a,
                                 std::uint64_t key_b = 0) {
    return splitmix64(splitmix64(splitmix64(master) ^ key_a) ^ key_b);
}

/// FNV-1a, used to turn stream tags (e.g. "train-states") into key material.
inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : tag) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline Stream make_stream(std::uint64_t seed) { return Stream{seed}; }

} // namespace specreuse

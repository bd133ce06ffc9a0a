#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace fsl::rng {

// Engine used everywhere. The distributions below are hand-rolled on top of
// the raw 64-bit output so that streams are identical across standard
// library implementations (std::*_distribution is implementation-defined).
using Engine = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-sensitive combination of several seed components into one seed.
std::uint64_t derive(std::initializer_list<std::uint64_t> parts);

// FNV-1a, for folding string identifiers (user ids) into seeds.
std::uint64_t hash_string(std::string_view s);

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection (n > 0).
std::size_t uniform_index(Engine& eng, std::size_t n);

// Standard normal via Box-Muller (one draw per call, no caching).
double normal(Engine& eng);

// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(Engine& eng, std::size_t n, std::size_t k);

} // namespace fsl::rng
